// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Scene description.
//
// World space is right-handed with +y up. Camera space follows the usual vision
// convention: +x right (image +x), +y down (image rows), +z along the view
// direction, so surfaces facing the camera have negative-z normals.

#pragma once

#include "polsss/fresnel.h"
#include "polsss/image.h"
#include "polsss/medium.h"
#include "polsss/shape.h"

#include <nlohmann/json.hpp>

#include <array>
#include <memory>
#include <optional>

namespace polsss {

struct Camera {
    Vec3 position{0.0, 0.0, 0.3};
    Vec3 look_at{0.0, 0.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    double vfov_deg = 30.0;
    int width = 128;
    int height = 128;

    Vec3 forward() const { return (look_at - position).normalized(); }
    Vec3 right() const { return forward().cross(up).normalized(); }
    Vec3 down() const { return forward().cross(right()); }

    /// Primary ray through image position (px, py) in pixel units (pixel centres at +0.5).
    Ray generate_ray(double px, double py) const;
    Vec3 to_camera_dir(const Vec3 &world) const;
    void validate() const;
};

/// Number of real spherical-harmonic coefficients for bands 0..2.
inline constexpr int kShCount = 9;
using ShCoeffs = std::array<std::array<double, kShCount>, 3>;

/// Real SH basis value for index k (ordering: (0,0), (1,-1), (1,0), (1,1),
/// (2,-2), (2,-1), (2,0), (2,1), (2,2)) at unit direction d.
double sh_basis(int k, const Vec3 &d);
std::array<double, kShCount> sh_basis_all(const Vec3 &d);

/// Environment radiance expanded in real SH bands 0..2, per RGB channel.
struct SHEnvironment {
    ShCoeffs coeffs{};  // coeffs[channel][k]

    /// Radiance with negative lobes clamped to zero.
    Rgb eval(const Vec3 &dir) const;
    double eval(const Vec3 &dir, int channel) const;
    /// Linear (unclamped) expansion.
    double eval_unclamped(const Vec3 &dir, int channel) const;
    /// Environment of uniform radiance `l`.
    static SHEnvironment constant(double l);
};

struct FlashLight {
    Vec3 center{0.02, 0.0, 0.3};
    double radius = 0.01;
    double intensity = 1.0;  // emitted radiance
};

struct ShapeSpec {
    ShapeKind kind = ShapeKind::Sphere;
    // Sphere: radius. Rounded box: half (3) + radius. Superquadric: axes (3) + e1, e2.
    // Triangle mesh: mesh source (icosphere / torus / obj) + parameters.
    double radius = 0.05;
    Vec3 half{0.03, 0.03, 0.03};
    Vec3 axes{0.05, 0.05, 0.05};
    double e1 = 1.0, e2 = 1.0;
    std::string mesh_source = "icosphere";  // icosphere | torus | obj
    int subdivisions = 4;
    double major_radius = 0.05, minor_radius = 0.02;
    std::string obj_path;
    Vec3 rotation_deg = Vec3::Zero();
    Vec3 translation = Vec3::Zero();

    std::shared_ptr<const Shape> build() const;
    bool operator==(const ShapeSpec &) const = default;
};

/// Immutable after construction; shared read-only across render workers.
struct Scene {
    ShapeSpec shape_spec;
    std::shared_ptr<const Shape> shape;  // built from shape_spec
    Camera camera;
    SHEnvironment env;
    FlashLight flash;
    bool has_flash = true;
    MediumParams medium;
    InterfaceParams interface;
    uint64_t seed = 1;

    /// Rebuilds `shape` and checks the scene invariants; throws InputError.
    void finalize();
};

/// Parses a scene document; throws SchemaError naming the offending JSON pointer.
Scene scene_from_json(const nlohmann::json &j);
nlohmann::json scene_to_json(const Scene &s);
Scene load_scene(const std::string &path);

/// Ground truth maps in camera space. Background: depth 0, normal 0, mask 0.
struct SceneGT {
    ImageD normal;
    ImageD depth;  // replicated across the three channels
    Mask mask;
};

SceneGT gt_maps(const Scene &scene);

/// Reference scene used by tests, benchmarks and the acceptance suite: a sphere of
/// radius 5 cm at the origin, camera 30 cm away, directional SH environment and
/// a camera-adjacent flash.
Scene canonical_scene(int resolution = 128);

}  // namespace polsss
