// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/medium.h"

#include "polsss/errors.h"

#include <atomic>
#include <string>

namespace polsss {

namespace {
std::atomic<double> g_hg_scale{1.0};
}

namespace testing {
void set_hg_normalization_scale(double scale) { g_hg_scale.store(scale); }
double hg_normalization_scale() { return g_hg_scale.load(); }
}  // namespace testing

void MediumParams::validate() const {
    for (int c = 0; c < 3; ++c) {
        if (!(sigma_t[c] > 0.0) || !std::isfinite(sigma_t[c]))
            throw InputError("sigma_t[" + std::to_string(c) + "] must be positive and finite");
        if (!(albedo[c] >= 0.0 && albedo[c] <= 1.0))
            throw InputError("albedo[" + std::to_string(c) + "] must lie in [0, 1]");
    }
    if (!(g > -1.0 && g < 1.0)) throw InputError("g must lie in (-1, 1)");
}

double hg_eval(double cos_theta, double g) {
    if (!(std::abs(g) < 1.0)) throw RefusalError("hg_eval: |g| must be < 1");
    const double denom = 1.0 + g * g - 2.0 * g * cos_theta;
    return g_hg_scale.load(std::memory_order_relaxed) * kInv4Pi * (1.0 - g * g) /
           (denom * std::sqrt(denom));
}

double hg_sample_cos(double g, double u1) {
    if (std::abs(g) < kHgIsotropicThreshold) return 1.0 - 2.0 * u1;
    const double t = (1.0 - g * g) / (1.0 - g + 2.0 * g * u1);
    return std::clamp((1.0 + g * g - t * t) / (2.0 * g), -1.0, 1.0);
}

Vec3 hg_sample(const Vec3 &incoming, double g, double u1, double u2) {
    const double cos_t = hg_sample_cos(g, u1);
    const double sin_t = safe_sqrt(1.0 - cos_t * cos_t);
    const double phi = 2.0 * kPi * u2;
    const Frame f = Frame::from_z(incoming);
    return f.to_world(Vec3(sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t)).normalized();
}

MuellerMatrix depolarizer() {
    Mat3 m = Mat3::Zero();
    m(0, 0) = 1.0;
    return MuellerMatrix(m);
}

}  // namespace polsss
