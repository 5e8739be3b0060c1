// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/stokes.h"

namespace polsss {

double measure_polarizer(const StokesVector &s, double theta) {
    return 0.5 * (s.s0() - s.s1() * std::cos(2.0 * theta) + s.s2() * std::sin(2.0 * theta));
}

StokesVector invert_capture(double i0, double i45, double i90, double i135) {
    const double s0 = 0.5 * (i0 + i45 + i90 + i135);
    return {s0, i90 - i0, 2.0 * i45 - s0};
}

DopAop dop_aop(const StokesVector &s) {
    DopAop r;
    const double lin = s.linear_magnitude();
    if (!(s.s0() > 0.0)) {
        r.degenerate = true;
        return r;
    }
    r.dop = std::min(1.0, lin / s.s0());
    if (lin == 0.0) {
        r.degenerate = true;
        return r;
    }
    double a = 0.5 * std::atan2(s.s2(), s.s1());
    if (a < 0.0) a += kPi;
    if (a >= kPi) a -= kPi;
    r.aop = a;
    return r;
}

MaxMin maxmin(const StokesVector &s) {
    const double lin = std::min(s.linear_magnitude(), std::max(0.0, s.s0()));
    return {0.5 * (s.s0() + lin), 0.5 * (s.s0() - lin)};
}

MuellerMatrix rotator(double phi) {
    const double c = std::cos(2.0 * phi), sn = std::sin(2.0 * phi);
    Mat3 m;
    m << 1.0, 0.0, 0.0,
         0.0, c, sn,
         0.0, -sn, c;
    return MuellerMatrix(m);
}

StokesVector rotate_frame(const StokesVector &s, double phi) { return rotator(phi) * s; }

MuellerMatrix change_of_frame(const Vec3 &k, const Vec3 &from, const Vec3 &to) {
    // to = cos(phi) from + sin(phi) (k x from)  =>  psi_to = psi_from - phi.
    const double phi = std::atan2(to.dot(k.cross(from)), to.dot(from));
    return rotator(-phi);
}

StokesImage invert_capture(const CaptureSet &c) {
    if (!c.consistent()) throw InputError("invert_capture: capture images differ in size");
    StokesImage out(c.width(), c.height());
    const size_t n = c[0].pixel_count();
    for (size_t p = 0; p < n; ++p)
        for (int ch = 0; ch < 3; ++ch)
            out.set(p, ch, invert_capture(c[0].at(p, ch), c[1].at(p, ch), c[2].at(p, ch), c[3].at(p, ch)));
    return out;
}

CaptureSet capture_images(const StokesImage &stokes) {
    CaptureSet c;
    const int w = stokes.width(), h = stokes.height();
    for (auto &im : c.images) im = ImageD(w, h);
    const size_t n = stokes.s[0].pixel_count();
    for (size_t p = 0; p < n; ++p) {
        for (int ch = 0; ch < 3; ++ch) {
            const double s0 = stokes.s[0].at(p, ch), s1 = stokes.s[1].at(p, ch), s2 = stokes.s[2].at(p, ch);
            // Exact values at the canonical angles (cos/sin of multiples of pi/2).
            c[0].at(p, ch) = 0.5 * (s0 - s1);
            c[1].at(p, ch) = 0.5 * (s0 + s2);
            c[2].at(p, ch) = 0.5 * (s0 + s1);
            c[3].at(p, ch) = 0.5 * (s0 - s2);
        }
    }
    return c;
}

PolarimetricMaps polarimetric_maps(const StokesImage &stokes, const Mask &mask) {
    const int w = stokes.width(), h = stokes.height();
    PolarimetricMaps m{ImageD(w, h), ImageD(w, h), ImageD(w, h), ImageD(w, h), mask, 0};
    const size_t n = stokes.s[0].pixel_count();
    for (size_t p = 0; p < n; ++p) {
        for (int ch = 0; ch < 3; ++ch) {
            const StokesVector s = stokes.at(p, ch);
            const DopAop da = dop_aop(s);
            const MaxMin mm = maxmin(s);
            m.dop.at(p, ch) = da.dop;
            m.aop.at(p, ch) = da.aop;
            m.imax.at(p, ch) = mm.imax;
            m.imin.at(p, ch) = mm.imin;
            if (da.degenerate) ++m.degenerate_aop_count;
        }
    }
    return m;
}

}  // namespace polsss
