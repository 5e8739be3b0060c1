// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polsss/math.h"
#include "polsss/stokes.h"

#include <array>

namespace polsss {

using Rgb = std::array<double, 3>;

/// Homogeneous subsurface scattering parameters.
struct MediumParams {
    Rgb sigma_t{60.0, 60.0, 60.0};  // extinction, 1/m
    Rgb albedo{0.9, 0.8, 0.7};
    double g = 0.0;

    /// Throws InputError when any field is outside its domain.
    void validate() const;
    bool operator==(const MediumParams &) const = default;
};

/// Henyey-Greenstein density per steradian. Throws RefusalError for |g| >= 1.
double hg_eval(double cos_theta, double g);

/// Cosine of the scattering angle drawn from the HG distribution.
double hg_sample_cos(double g, double u1);

/// Direction drawn from HG around `incoming` (the propagation direction).
Vec3 hg_sample(const Vec3 &incoming, double g, double u1, double u2);

inline double sample_free_flight(double sigma, double u) { return -std::log1p(-u) / sigma; }

inline double transmittance(double sigma, double d) { return std::exp(-sigma * d); }

inline StokesVector depolarize(const StokesVector &s) { return StokesVector::unpolarized(s.s0()); }

/// Mueller matrix of the ideal depolarizer.
MuellerMatrix depolarizer();

/// Below this |g| sampling uses the isotropic branch.
inline constexpr double kHgIsotropicThreshold = 1e-3;

/// Bounces before Russian roulette starts, and its survival clamp.
inline constexpr int kRouletteStartBounce = 32;
inline constexpr double kRouletteMinSurvival = 0.05;
inline constexpr double kRouletteMaxSurvival = 0.95;

namespace testing {
/// Mutation hook: scales the HG normalization constant. Used by the self-test
/// harness to prove it notices a broken phase function; 1.0 in normal operation.
void set_hg_normalization_scale(double scale);
double hg_normalization_scale();
}  // namespace testing

}  // namespace polsss
