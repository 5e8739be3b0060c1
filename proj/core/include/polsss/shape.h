// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polsss/math.h"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace polsss {

struct Ray {
    Vec3 o;
    Vec3 d;  // unit length
    Vec3 at(double t) const { return o + t * d; }
};

struct Hit {
    double t = 0.0;
    Vec3 p;
    Vec3 n;               // outward geometric normal
    bool inside = false;  // the ray travels from the interior towards the boundary

    /// Normal oriented towards the side the ray came from.
    Vec3 facing_normal() const { return inside ? Vec3(-n) : n; }
};

/// Rigid transform local -> world.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    /// Rotation from XYZ Euler angles in degrees (applied x, then y, then z).
    static Pose from_euler_deg(const Vec3 &euler_deg, const Vec3 &translation);
    Vec3 to_local_point(const Vec3 &p) const { return rotation.transpose() * (p - translation); }
    Vec3 to_local_dir(const Vec3 &d) const { return rotation.transpose() * d; }
    Vec3 to_world_point(const Vec3 &p) const { return rotation * p + translation; }
    Vec3 to_world_dir(const Vec3 &d) const { return rotation * d; }
};

enum class ShapeKind { Sphere, RoundedBox, Superquadric, TriangleMesh };

std::string to_string(ShapeKind k);

/// Closed, outward-oriented surface bounding the medium.
class Shape {
  public:
    explicit Shape(Pose pose) : pose_(std::move(pose)) {}
    virtual ~Shape() = default;

    virtual ShapeKind kind() const = 0;
    /// Convex shapes let the medium walk skip boundary queries for interior segments.
    virtual bool convex() const = 0;

    /// Nearest intersection with t in (t_min, t_max). Throws RefusalError for a
    /// degenerate (non-unit or non-finite) direction.
    std::optional<Hit> intersect(const Ray &ray, double t_max = std::numeric_limits<double>::infinity(),
                                 double t_min = 0.0) const;
    bool contains(const Vec3 &p) const { return local_contains(pose_.to_local_point(p)); }

    /// World-space bounding sphere.
    Vec3 bound_center() const { return pose_.translation; }
    double bound_radius() const { return local_bound_radius(); }
    const Pose &pose() const { return pose_; }
    /// Characteristic length used to scale ray offsets.
    double scale() const { return local_bound_radius(); }

  protected:
    virtual std::optional<Hit> local_intersect(const Ray &ray, double t_min, double t_max) const = 0;
    virtual bool local_contains(const Vec3 &p) const = 0;
    virtual double local_bound_radius() const = 0;

  private:
    Pose pose_;
};

class Sphere final : public Shape {
  public:
    Sphere(double radius, Pose pose = {});
    ShapeKind kind() const override { return ShapeKind::Sphere; }
    bool convex() const override { return true; }
    double radius() const { return radius_; }

  protected:
    std::optional<Hit> local_intersect(const Ray &ray, double t_min, double t_max) const override;
    bool local_contains(const Vec3 &p) const override { return p.squaredNorm() < radius_ * radius_; }
    double local_bound_radius() const override { return radius_; }

  private:
    double radius_;
};

/// Convex shape given by a convex gauge-like function G (G < 0 inside, G = 0 on
/// the surface). Intersection: slab clip against the local box, golden-section
/// search for the minimum of G along the ray, then bisection for the root.
class ConvexImplicit : public Shape {
  public:
    ConvexImplicit(Vec3 half_extent, Pose pose);
    bool convex() const override { return true; }

    virtual double field(const Vec3 &p) const = 0;
    virtual Vec3 gradient(const Vec3 &p) const = 0;

  protected:
    std::optional<Hit> local_intersect(const Ray &ray, double t_min, double t_max) const override;
    bool local_contains(const Vec3 &p) const override { return field(p) < 0.0; }
    double local_bound_radius() const override { return half_extent_.norm(); }
    const Vec3 &half_extent() const { return half_extent_; }

  private:
    Hit make_hit(const Ray &ray, double t, bool inside) const;
    Vec3 half_extent_;
};

/// Box with half sizes `half` whose edges are rounded with radius `radius`
/// (overall half extent half + radius).
class RoundedBox final : public ConvexImplicit {
  public:
    RoundedBox(Vec3 half, double radius, Pose pose = {});
    ShapeKind kind() const override { return ShapeKind::RoundedBox; }
    double field(const Vec3 &p) const override;
    Vec3 gradient(const Vec3 &p) const override;
    const Vec3 &half() const { return half_; }
    double radius() const { return radius_; }

  private:
    Vec3 half_;
    double radius_;
};

/// Superellipsoid with semi-axes `axes` and shape exponents e1 (north-south) and
/// e2 (east-west); restricted to (0, 2] so the solid stays convex.
class Superquadric final : public ConvexImplicit {
  public:
    Superquadric(Vec3 axes, double e1, double e2, Pose pose = {});
    ShapeKind kind() const override { return ShapeKind::Superquadric; }
    double field(const Vec3 &p) const override;
    Vec3 gradient(const Vec3 &p) const override;
    const Vec3 &axes() const { return axes_; }
    double e1() const { return e1_; }
    double e2() const { return e2_; }

  private:
    double inside_outside(const Vec3 &p) const;
    Vec3 axes_;
    double e1_, e2_;
};

struct Triangle {
    std::array<uint32_t, 3> v;
};

struct MeshData {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
};

/// Closed triangle mesh with a BVH and watertight ray/triangle tests.
class TriangleMesh final : public Shape {
  public:
    TriangleMesh(MeshData mesh, Pose pose = {});
    ShapeKind kind() const override { return ShapeKind::TriangleMesh; }
    bool convex() const override { return false; }
    const MeshData &mesh() const { return mesh_; }
    size_t node_count() const { return nodes_.size(); }
    /// Every edge shared by exactly two triangles with opposite orientation.
    bool is_closed_manifold() const;

  protected:
    std::optional<Hit> local_intersect(const Ray &ray, double t_min, double t_max) const override;
    bool local_contains(const Vec3 &p) const override;
    double local_bound_radius() const override { return bound_radius_; }

  private:
    struct Node {
        Eigen::AlignedBox3d box;
        uint32_t first = 0;  // first primitive (leaf) or right child (interior)
        uint16_t count = 0;  // > 0 for leaves
        uint8_t axis = 0;
    };
    void build();
    uint32_t build_recursive(uint32_t begin, uint32_t end);

    MeshData mesh_;
    std::vector<uint32_t> order_;
    std::vector<Node> nodes_;
    double bound_radius_ = 0.0;
};

/// Geodesic sphere from a subdivided icosahedron, radius 1 scaled by `radius`.
MeshData make_icosphere(int subdivisions, double radius);
/// Torus around the local z axis.
MeshData make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments);
/// Minimal Wavefront OBJ reader (v / f records; polygons are fan-triangulated).
MeshData load_obj(const std::string &path);

}  // namespace polsss
