// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Schema-checking accessor over nlohmann::json that reports JSON pointers.

#pragma once

#include "polsss/errors.h"
#include "polsss/math.h"
#include "polsss/medium.h"

#include <nlohmann/json.hpp>

#include <initializer_list>
#include <string>

namespace polsss::detail {

using nlohmann::json;

class Reader {
  public:
    Reader(const json &j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {}

    bool has(const std::string &key) const { return j_.is_object() && j_.contains(key); }
    Reader child(const std::string &key) const {
        require_object();
        if (!j_.contains(key)) throw SchemaError(ptr_ + "/" + key, "required field missing");
        return Reader(j_.at(key), ptr_ + "/" + key);
    }
    Reader element(size_t i) const { return Reader(j_.at(i), ptr_ + "/" + std::to_string(i)); }

    double number() const {
        if (!j_.is_number()) throw SchemaError(ptr_, "expected a number");
        return j_.get<double>();
    }
    int integer() const {
        if (!j_.is_number_integer()) throw SchemaError(ptr_, "expected an integer");
        return j_.get<int>();
    }
    uint64_t uint64() const {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<int64_t>() >= 0))
            throw SchemaError(ptr_, "expected a non-negative integer");
        return j_.get<uint64_t>();
    }
    std::string string() const {
        if (!j_.is_string()) throw SchemaError(ptr_, "expected a string");
        return j_.get<std::string>();
    }
    Vec3 vec3() const {
        array_of(3);
        return {element(0).number(), element(1).number(), element(2).number()};
    }
    Rgb rgb() const {
        array_of(3);
        return {element(0).number(), element(1).number(), element(2).number()};
    }
    void array_of(size_t n) const {
        if (!j_.is_array() || j_.size() != n)
            throw SchemaError(ptr_, "expected an array of " + std::to_string(n) + " elements");
    }
    void require_object() const {
        if (!j_.is_object()) throw SchemaError(ptr_, "expected an object");
    }
    void only_keys(std::initializer_list<const char *> allowed) const {
        require_object();
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool ok = false;
            for (const char *a : allowed) ok = ok || it.key() == a;
            if (!ok) throw SchemaError(ptr_ + "/" + it.key(), "unknown field");
        }
    }
    const std::string &pointer() const { return ptr_; }

  private:
    const json &j_;
    std::string ptr_;
};

}  // namespace polsss::detail
