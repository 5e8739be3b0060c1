// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/fresnel.h"

#include "polsss/errors.h"

#include <complex>
#include <string>

namespace polsss {

void InterfaceParams::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw InputError("interface eta must be positive, got " + std::to_string(eta));
}

FresnelCoeffs fresnel(double cos_theta_i, double eta) {
    FresnelCoeffs f;
    const double ci = std::clamp(cos_theta_i, 0.0, 1.0);
    const double sin2_t = (1.0 - ci * ci) / (eta * eta);
    if (sin2_t >= 1.0) {
        // TIR: unit-modulus complex amplitudes, only their phase difference survives.
        using C = std::complex<double>;
        const C ct = std::sqrt(C(1.0 - sin2_t, 0.0));  // purely imaginary
        const C rs = (ci - eta * ct) / (ci + eta * ct);
        const C rp = (eta * ci - ct) / (eta * ci + ct);
        f.tir = true;
        f.rs = rs.real();
        f.rp = rp.real();
        f.Rs = f.Rp = 1.0;
        f.Ts = f.Tp = 0.0;
        f.retardance_cos = (rs * std::conj(rp)).real();
        return f;
    }
    const double ct = std::sqrt(1.0 - sin2_t);
    f.cos_t = ct;
    f.rs = (ci - eta * ct) / (ci + eta * ct);
    f.rp = (eta * ci - ct) / (eta * ci + ct);
    f.Rs = std::min(1.0, f.rs * f.rs);
    f.Rp = std::min(1.0, f.rp * f.rp);
    f.Ts = 1.0 - f.Rs;
    f.Tp = 1.0 - f.Rp;
    const double rr = std::sqrt(f.Rs * f.Rp);
    f.retardance_cos = rr > 0.0 ? (f.rs * f.rp) / rr : 1.0;
    return f;
}

double fresnel_reflectance(double cos_theta_i, double eta) {
    return fresnel(cos_theta_i, eta).reflectance();
}

MuellerMatrix reflect_mueller(const FresnelCoeffs &f) {
    const double a = 0.5 * (f.Rs + f.Rp);
    const double b = 0.5 * (f.Rp - f.Rs);
    const double c = std::sqrt(f.Rs * f.Rp) * f.retardance_cos;
    Mat3 m;
    m << a, b, 0.0,
         b, a, 0.0,
         0.0, 0.0, c;
    return MuellerMatrix(m);
}

MuellerMatrix reflect_mueller(double cos_theta_i, double eta) {
    return reflect_mueller(fresnel(cos_theta_i, eta));
}

MuellerMatrix refract_mueller(const FresnelCoeffs &f) {
    if (f.tir) throw RefusalError("refract_mueller: total internal reflection");
    const double a = 0.5 * (f.Ts + f.Tp);
    const double b = 0.5 * (f.Tp - f.Ts);
    const double c = std::sqrt(f.Ts * f.Tp);
    Mat3 m;
    m << a, b, 0.0,
         b, a, 0.0,
         0.0, 0.0, c;
    return MuellerMatrix(m);
}

MuellerMatrix refract_mueller(double cos_theta_i, double eta, Crossing direction) {
    if (!(cos_theta_i > 0.0)) throw RefusalError("refract_mueller: grazing incidence");
    const double rel = direction == Crossing::Enter ? eta : 1.0 / eta;
    return refract_mueller(fresnel(cos_theta_i, rel));
}

double critical_angle(double eta) {
    if (!(eta > 1.0)) throw RefusalError("critical_angle: requires eta > 1");
    return std::asin(1.0 / eta);
}

double brewster_angle(double eta) { return std::atan(eta); }

}  // namespace polsss
