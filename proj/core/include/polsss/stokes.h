// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Linear-polarization algebra.
//
// Sign convention: a polarizer at angle theta (measured from the frame's reference
// axis towards its second axis) transmits
//     I(theta) = 1/2 (s0 - s1 cos 2theta + s2 sin 2theta),
// which makes the capture inversion s1 = I90 - I0, s2 = 2 I45 - s0 exact. Light
// linearly polarized along the reference axis therefore has s1 = -s0.

#pragma once

#include "polsss/image.h"
#include "polsss/math.h"

#include <array>

namespace polsss {

struct StokesVector {
    Vec3 v = Vec3::Zero();

    StokesVector() = default;
    StokesVector(double s0, double s1, double s2) : v(s0, s1, s2) {}
    explicit StokesVector(const Vec3 &x) : v(x) {}

    static StokesVector unpolarized(double s0) { return {s0, 0.0, 0.0}; }

    double s0() const { return v[0]; }
    double s1() const { return v[1]; }
    double s2() const { return v[2]; }
    double linear_magnitude() const { return std::hypot(v[1], v[2]); }

    /// s0 >= |(s1, s2)| - eps and s0 >= -eps.
    bool realizable(double eps = 1e-9) const {
        return v[0] >= -eps && v[0] >= linear_magnitude() - eps;
    }

    StokesVector operator+(const StokesVector &o) const { return StokesVector(Vec3(v + o.v)); }
    StokesVector operator*(double k) const { return StokesVector(Vec3(v * k)); }
    bool operator==(const StokesVector &o) const { return v == o.v; }
};

struct MuellerMatrix {
    Mat3 m = Mat3::Identity();

    MuellerMatrix() = default;
    explicit MuellerMatrix(const Mat3 &x) : m(x) {}

    static MuellerMatrix identity() { return MuellerMatrix(); }
    static MuellerMatrix zero() { return MuellerMatrix(Mat3::Zero()); }

    StokesVector operator*(const StokesVector &s) const { return StokesVector(Vec3(m * s.v)); }
    MuellerMatrix operator*(const MuellerMatrix &o) const { return MuellerMatrix(Mat3(m * o.m)); }
    MuellerMatrix operator*(double k) const { return MuellerMatrix(Mat3(m * k)); }
    double operator()(int r, int c) const { return m(r, c); }
};

/// Intensity behind an ideal linear polarizer at `theta` radians.
double measure_polarizer(const StokesVector &s, double theta);

/// Stokes vector from the four canonical captures (0, 45, 90, 135 degrees).
StokesVector invert_capture(double i0, double i45, double i90, double i135);

struct DopAop {
    double dop = 0.0;
    double aop = 0.0;         // [0, pi)
    bool degenerate = false;  // s0 == 0 or s1 == s2 == 0: aop reported as 0
};

DopAop dop_aop(const StokesVector &s);

struct MaxMin {
    double imax = 0.0;
    double imin = 0.0;
};

MaxMin maxmin(const StokesVector &s);

/// Standard Mueller rotator R(phi) = [[1,0,0],[0,c,s],[0,-s,c]] with c = cos 2phi,
/// s = sin 2phi. Under the convention above this rotates the polarization
/// ellipse by +phi (equivalently: re-expresses s in a frame rotated by -phi).
StokesVector rotate_frame(const StokesVector &s, double phi);
MuellerMatrix rotator(double phi);

/// Mueller matrix converting a Stokes vector expressed with reference axis `from`
/// into one expressed with reference axis `to`; both axes are perpendicular to the
/// propagation direction `k`, and frames are right-handed (axis, k x axis, k).
MuellerMatrix change_of_frame(const Vec3 &k, const Vec3 &from, const Vec3 &to);

/// Per-pixel, per-channel Stokes image.
struct StokesImage {
    std::array<ImageD, 3> s;  // s0, s1, s2 planes, each RGB

    StokesImage() = default;
    StokesImage(int width, int height) : s{ImageD(width, height), ImageD(width, height), ImageD(width, height)} {}

    int width() const { return s[0].width(); }
    int height() const { return s[0].height(); }
    StokesVector at(size_t pixel, int c) const {
        return {s[0].at(pixel, c), s[1].at(pixel, c), s[2].at(pixel, c)};
    }
    void set(size_t pixel, int c, const StokesVector &v) {
        for (int k = 0; k < 3; ++k) s[k].at(pixel, c) = v.v[k];
    }
    bool operator==(const StokesImage &o) const { return s == o.s; }
};

/// Pixelwise inversion of a capture set; throws InputError on dimension mismatch.
StokesImage invert_capture(const CaptureSet &c);

/// Pixelwise measurement at the four canonical angles.
CaptureSet capture_images(const StokesImage &stokes);

struct PolarimetricMaps {
    ImageD dop;
    ImageD aop;
    ImageD imax;
    ImageD imin;
    Mask mask;
    size_t degenerate_aop_count = 0;  // channel-pixels where AoP was undefined
};

/// DoP/AoP/max/min maps for every pixel and channel. `mask` is carried through.
PolarimetricMaps polarimetric_maps(const StokesImage &stokes, const Mask &mask);

}  // namespace polsss
