// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Physics self-test suite run by `polsss selftest`.

#pragma once

#include "polsss/fresnel.h"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace polsss {

struct SelfTestOptions {
    double eta = kDefaultEta;  // interface index used by the Fresnel checks
    int threads = 0;
};

struct SelfTestCase {
    std::string name;
    std::string status;  // "pass", "fail" or "skip"
    std::string detail;
};

struct SelfTestReport {
    std::vector<SelfTestCase> cases;

    bool passed() const;
    nlohmann::json to_json() const;
};

SelfTestReport run_selftest(const SelfTestOptions &options = {});

}  // namespace polsss
