// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Smooth dielectric interface.
//
// Local frames: for a beam with propagation direction k at an interface, the
// reference axis is the s-direction (perpendicular to the plane of incidence) and
// the frame is (s, k x s, k). Amplitude coefficients follow the Hecht convention,
// which is consistent with these frames (r_p = -r_s at normal incidence).

#pragma once

#include "polsss/stokes.h"

namespace polsss {

inline constexpr double kDefaultEta = 1.5046;

struct InterfaceParams {
    double eta = kDefaultEta;  // interior / exterior index ratio

    void validate() const;
};

struct FresnelCoeffs {
    double rs = 0.0, rp = 0.0;  // amplitude reflection (real part outside TIR)
    double Rs = 0.0, Rp = 0.0;
    double Ts = 0.0, Tp = 0.0;
    double cos_t = 0.0;  // cosine of the transmitted angle, 0 under TIR
    double retardance_cos = 0.0;  // Re(rs conj(rp)) / sqrt(Rs Rp); carries TIR phase
    bool tir = false;

    double reflectance() const { return 0.5 * (Rs + Rp); }
    double transmittance() const { return 0.5 * (Ts + Tp); }
};

/// Fresnel coefficients for incidence cosine `cos_theta_i` in [0, 1] and relative
/// index `eta` = n_transmitted / n_incident.
FresnelCoeffs fresnel(double cos_theta_i, double eta);

/// Unpolarized reflectance (Rs + Rp) / 2; 1 under total internal reflection.
double fresnel_reflectance(double cos_theta_i, double eta);

/// Reflection Mueller matrix in the interface s/p frames.
MuellerMatrix reflect_mueller(double cos_theta_i, double eta);
MuellerMatrix reflect_mueller(const FresnelCoeffs &f);

enum class Crossing { Enter, Exit };

/// Transmission Mueller matrix (power transmittances). `direction` only selects
/// the relative index: Enter uses `eta`, Exit uses 1/`eta`. Throws RefusalError
/// under total internal reflection or at grazing incidence.
MuellerMatrix refract_mueller(double cos_theta_i, double eta, Crossing direction);
MuellerMatrix refract_mueller(const FresnelCoeffs &f);

/// Critical angle asin(1/eta) of the dense side; throws RefusalError for eta <= 1.
double critical_angle(double eta);
double brewster_angle(double eta);

}  // namespace polsss
