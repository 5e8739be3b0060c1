// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace polsss {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvPi = 1.0 / std::numbers::pi;
inline constexpr double kInv4Pi = 0.25 / std::numbers::pi;

template <typename T>
constexpr T sqr(T v) {
    return v * v;
}

inline double safe_sqrt(double v) { return std::sqrt(std::max(0.0, v)); }

inline double deg_to_rad(double d) { return d * (kPi / 180.0); }
inline double rad_to_deg(double r) { return r * (180.0 / kPi); }

/// Any unit vector perpendicular to `n` (Duff et al. branchless ONB).
inline Vec3 any_perpendicular(const Vec3 &n) {
    const double sign = std::copysign(1.0, n.z());
    const double a = -1.0 / (sign + n.z());
    const double b = n.x() * n.y() * a;
    return Vec3(1.0 + sign * n.x() * n.x() * a, sign * b, -sign * n.x());
}

/// Orthonormal basis with `w` as the third axis.
struct Frame {
    Vec3 u, v, w;

    static Frame from_z(const Vec3 &w) {
        Frame f;
        f.w = w;
        f.u = any_perpendicular(w);
        f.v = w.cross(f.u);
        return f;
    }
    Vec3 to_world(const Vec3 &l) const { return u * l.x() + v * l.y() + w * l.z(); }
};

inline Vec3 reflect(const Vec3 &d, const Vec3 &n) { return d - 2.0 * d.dot(n) * n; }

/// Refracts `d` (pointing towards the surface) through a boundary with normal `n`
/// facing the incident side; `eta` = n_transmitted / n_incident.
/// Returns false on total internal reflection.
inline bool refract(const Vec3 &d, const Vec3 &n, double eta, Vec3 &out) {
    const double cos_i = -d.dot(n);
    const double sin2_t = (1.0 - cos_i * cos_i) / (eta * eta);
    if (sin2_t >= 1.0) return false;
    const double cos_t = std::sqrt(1.0 - sin2_t);
    out = (d / eta + (cos_i / eta - cos_t) * n).normalized();
    return true;
}

}  // namespace polsss
