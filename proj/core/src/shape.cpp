// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/shape.h"

#include "polsss/errors.h"

#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace polsss {

std::string to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::Sphere: return "sphere";
        case ShapeKind::RoundedBox: return "rounded_box";
        case ShapeKind::Superquadric: return "superquadric";
        case ShapeKind::TriangleMesh: return "triangle_mesh";
    }
    return "unknown";
}

Pose Pose::from_euler_deg(const Vec3 &euler_deg, const Vec3 &translation) {
    Pose p;
    p.rotation = (Eigen::AngleAxisd(deg_to_rad(euler_deg.z()), Vec3::UnitZ()) *
                  Eigen::AngleAxisd(deg_to_rad(euler_deg.y()), Vec3::UnitY()) *
                  Eigen::AngleAxisd(deg_to_rad(euler_deg.x()), Vec3::UnitX()))
                     .toRotationMatrix();
    p.translation = translation;
    return p;
}

std::optional<Hit> Shape::intersect(const Ray &ray, double t_max, double t_min) const {
    const double len2 = ray.d.squaredNorm();
    if (!std::isfinite(len2) || std::abs(len2 - 1.0) > 1e-6 || !ray.o.allFinite())
        throw RefusalError("intersect: ray direction must be a finite unit vector");
    const Ray local{pose_.to_local_point(ray.o), pose_.to_local_dir(ray.d)};
    auto hit = local_intersect(local, t_min, t_max);
    if (!hit) return std::nullopt;
    hit->p = ray.at(hit->t);
    hit->n = pose_.to_world_dir(hit->n).normalized();
    return hit;
}

// --- Sphere ------------------------------------------------------------------

Sphere::Sphere(double radius, Pose pose) : Shape(std::move(pose)), radius_(radius) {
    if (!(radius > 0.0)) throw InputError("sphere radius must be positive");
}

std::optional<Hit> Sphere::local_intersect(const Ray &ray, double t_min, double t_max) const {
    // Numerically stable quadratic; b' = o.d, c = |o|^2 - r^2.
    const double b = ray.o.dot(ray.d);
    const Vec3 perp = ray.o - b * ray.d;
    const double disc = radius_ * radius_ - perp.squaredNorm();
    if (disc < 0.0) return std::nullopt;
    const double c = ray.o.squaredNorm() - radius_ * radius_;
    const double q = -b - std::copysign(std::sqrt(disc), b);
    double t0 = q, t1 = q != 0.0 ? c / q : 0.0;
    if (t0 > t1) std::swap(t0, t1);
    double t = t0;
    if (!(t > t_min)) t = t1;
    if (!(t > t_min) || !(t < t_max)) return std::nullopt;
    Hit h;
    h.t = t;
    h.p = ray.at(t);
    h.n = h.p / radius_;
    h.inside = ray.d.dot(h.n) > 0.0;
    return h;
}

// --- Convex implicit shapes ---------------------------------------------------

ConvexImplicit::ConvexImplicit(Vec3 half_extent, Pose pose)
    : Shape(std::move(pose)), half_extent_(std::move(half_extent)) {}

Hit ConvexImplicit::make_hit(const Ray &ray, double t, bool inside) const {
    Hit h;
    h.t = t;
    h.p = ray.at(t);
    h.n = gradient(h.p).normalized();
    h.inside = inside;
    return h;
}

std::optional<Hit> ConvexImplicit::local_intersect(const Ray &ray, double t_min, double t_max) const {
    // Slab clip against a slightly enlarged box so G > 0 at the far end.
    const Vec3 box = half_extent_ * 1.001;
    double t0 = t_min, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        if (ray.d[a] == 0.0) {
            if (std::abs(ray.o[a]) > box[a]) return std::nullopt;
            continue;
        }
        const double inv = 1.0 / ray.d[a];
        double ta = (-box[a] - ray.o[a]) * inv, tb = (box[a] - ray.o[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    const double tol = 1e-13 * half_extent_.maxCoeff();
    auto g = [&](double t) { return field(ray.at(t)); };
    auto bisect = [&](double lo, double hi, bool lo_inside) {
        // Invariant: sign(G(lo)) != sign(G(hi)).
        for (int i = 0; i < 200 && hi - lo > tol; ++i) {
            const double mid = 0.5 * (lo + hi);
            const bool mid_inside = g(mid) < 0.0;
            (mid_inside == lo_inside ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    const double g0 = g(t0);
    if (g0 < 0.0) {
        // Starting inside the solid: the single exit lies beyond t0.
        if (g(t1) < 0.0) return std::nullopt;  // segment ends inside (t_max cut)
        return make_hit(ray, bisect(t0, t1, true), true);
    }
    // Outside: locate the minimum of G along the segment (G is convex along lines).
    constexpr double kInvPhi = 0.6180339887498949;
    double a = t0, b = t1;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double gc = g(c), gd = g(d);
    for (int i = 0; i < 120 && b - a > tol; ++i) {
        if (gc < 0.0 || gd < 0.0) break;
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - kInvPhi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + kInvPhi * (b - a);
            gd = g(d);
        }
    }
    double inner;
    if (gc < 0.0)
        inner = c;
    else if (gd < 0.0)
        inner = d;
    else
        return std::nullopt;
    return make_hit(ray, bisect(t0, inner, false), false);
}

RoundedBox::RoundedBox(Vec3 half, double radius, Pose pose)
    : ConvexImplicit(half + Vec3::Constant(radius), std::move(pose)), half_(std::move(half)), radius_(radius) {
    if (!(half_.minCoeff() >= 0.0) || !(radius > 0.0))
        throw InputError("rounded box requires non-negative half sizes and a positive radius");
}

double RoundedBox::field(const Vec3 &p) const {
    const Vec3 q = p.cwiseAbs() - half_;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0) - radius_;
}

Vec3 RoundedBox::gradient(const Vec3 &p) const {
    const Vec3 closest = p.cwiseMax(-half_).cwiseMin(half_);
    const Vec3 d = p - closest;
    if (d.squaredNorm() > 0.0) return d;
    // Inside the core box: direction of the nearest face.
    const Vec3 q = p.cwiseAbs() - half_;
    int axis;
    q.maxCoeff(&axis);
    Vec3 n = Vec3::Zero();
    n[axis] = std::copysign(1.0, p[axis]);
    return n;
}

Superquadric::Superquadric(Vec3 axes, double e1, double e2, Pose pose)
    : ConvexImplicit(axes, std::move(pose)), axes_(std::move(axes)), e1_(e1), e2_(e2) {
    if (!(axes_.minCoeff() > 0.0)) throw InputError("superquadric axes must be positive");
    if (!(e1 > 0.0 && e1 <= 2.0 && e2 > 0.0 && e2 <= 2.0))
        throw InputError("superquadric exponents must lie in (0, 2]");
}

double Superquadric::inside_outside(const Vec3 &p) const {
    const double x = std::abs(p.x() / axes_.x()), y = std::abs(p.y() / axes_.y()),
                 z = std::abs(p.z() / axes_.z());
    const double a = std::pow(x, 2.0 / e2_) + std::pow(y, 2.0 / e2_);
    return std::pow(a, e2_ / e1_) + std::pow(z, 2.0 / e1_);
}

double Superquadric::field(const Vec3 &p) const {
    // (F)^(e1/2) is positively homogeneous of degree one: a convex gauge.
    return std::pow(inside_outside(p), 0.5 * e1_) - 1.0;
}

Vec3 Superquadric::gradient(const Vec3 &p) const {
    const double x = std::abs(p.x() / axes_.x()), y = std::abs(p.y() / axes_.y()),
                 z = std::abs(p.z() / axes_.z());
    const double a = std::pow(x, 2.0 / e2_) + std::pow(y, 2.0 / e2_);
    const double k = 2.0 / e1_;
    Vec3 g;
    const double ak = a > 0.0 ? std::pow(a, e2_ / e1_ - 1.0) : 0.0;
    g.x() = x > 0.0 ? k * ak * std::pow(x, 2.0 / e2_ - 1.0) * std::copysign(1.0, p.x()) / axes_.x() : 0.0;
    g.y() = y > 0.0 ? k * ak * std::pow(y, 2.0 / e2_ - 1.0) * std::copysign(1.0, p.y()) / axes_.y() : 0.0;
    g.z() = z > 0.0 ? k * std::pow(z, 2.0 / e1_ - 1.0) * std::copysign(1.0, p.z()) / axes_.z() : 0.0;
    if (g.squaredNorm() == 0.0) return p;
    return g;
}

// --- Triangle mesh ------------------------------------------------------------

TriangleMesh::TriangleMesh(MeshData mesh, Pose pose) : Shape(std::move(pose)), mesh_(std::move(mesh)) {
    if (mesh_.triangles.empty()) throw InputError("triangle mesh has no triangles");
    for (const auto &t : mesh_.triangles)
        for (auto i : t.v)
            if (i >= mesh_.vertices.size()) throw InputError("triangle mesh index out of range");
    for (const auto &v : mesh_.vertices) bound_radius_ = std::max(bound_radius_, v.norm());
    build();
}

bool TriangleMesh::is_closed_manifold() const {
    std::map<std::pair<uint32_t, uint32_t>, int> edges;
    for (const auto &t : mesh_.triangles)
        for (int e = 0; e < 3; ++e) edges[{t.v[e], t.v[(e + 1) % 3]}] += 1;
    for (const auto &[e, n] : edges) {
        if (n != 1) return false;
        auto it = edges.find({e.second, e.first});
        if (it == edges.end() || it->second != 1) return false;
    }
    return true;
}

void TriangleMesh::build() {
    order_.resize(mesh_.triangles.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.clear();
    nodes_.reserve(2 * order_.size());
    build_recursive(0, static_cast<uint32_t>(order_.size()));
}

uint32_t TriangleMesh::build_recursive(uint32_t begin, uint32_t end) {
    const uint32_t index = static_cast<uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box, centroids;
    auto centroid = [&](uint32_t tri) {
        const auto &t = mesh_.triangles[tri];
        return Vec3((mesh_.vertices[t.v[0]] + mesh_.vertices[t.v[1]] + mesh_.vertices[t.v[2]]) / 3.0);
    };
    for (uint32_t i = begin; i < end; ++i) {
        const auto &t = mesh_.triangles[order_[i]];
        for (auto v : t.v) box.extend(mesh_.vertices[v]);
        centroids.extend(centroid(order_[i]));
    }
    nodes_[index].box = box;
    const uint32_t count = end - begin;
    const Vec3 extent = centroids.sizes();
    int axis;
    extent.maxCoeff(&axis);
    if (count <= 4 || extent[axis] <= 0.0) {
        nodes_[index].first = begin;
        nodes_[index].count = static_cast<uint16_t>(count);
        return index;
    }
    const uint32_t mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](uint32_t a, uint32_t b) { return centroid(a)[axis] < centroid(b)[axis]; });
    nodes_[index].axis = static_cast<uint8_t>(axis);
    build_recursive(begin, mid);
    const uint32_t right = build_recursive(mid, end);
    nodes_[index].first = right;
    return index;
}

namespace {

bool ray_box(const Eigen::AlignedBox3d &box, const Vec3 &o, const Vec3 &inv_d, double t_min, double t_max) {
    for (int a = 0; a < 3; ++a) {
        double t0 = (box.min()[a] - o[a]) * inv_d[a];
        double t1 = (box.max()[a] - o[a]) * inv_d[a];
        if (t0 > t1) std::swap(t0, t1);
        t1 *= 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
        t_min = t0 > t_min ? t0 : t_min;
        t_max = t1 < t_max ? t1 : t_max;
        if (t_min > t_max) return false;
    }
    return true;
}

// Watertight ray/triangle intersection (Woop, Benthin, Wald 2013).
struct WatertightRay {
    int kx, ky, kz;
    double sx, sy, sz;
    Vec3 o;

    explicit WatertightRay(const Ray &r) : o(r.o) {
        r.d.cwiseAbs().maxCoeff(&kz);
        kx = (kz + 1) % 3;
        ky = (kx + 1) % 3;
        if (r.d[kz] < 0.0) std::swap(kx, ky);
        sx = r.d[kx] / r.d[kz];
        sy = r.d[ky] / r.d[kz];
        sz = 1.0 / r.d[kz];
    }

    bool intersect(const Vec3 &p0, const Vec3 &p1, const Vec3 &p2, double t_min, double t_max, double &t_out) const {
        const Vec3 a = p0 - o, b = p1 - o, c = p2 - o;
        const double ax = a[kx] - sx * a[kz], ay = a[ky] - sy * a[kz];
        const double bx = b[kx] - sx * b[kz], by = b[ky] - sy * b[kz];
        const double cx = c[kx] - sx * c[kz], cy = c[ky] - sy * c[kz];
        double u = cx * by - cy * bx;
        double v = ax * cy - ay * cx;
        double w = bx * ay - by * ax;
        if (u == 0.0 || v == 0.0 || w == 0.0) {
            // Fall back to extended precision on exact edge hits.
            const long double cxl = cx, cyl = cy, bxl = bx, byl = by, axl = ax, ayl = ay;
            u = static_cast<double>(cxl * byl - cyl * bxl);
            v = static_cast<double>(axl * cyl - ayl * cxl);
            w = static_cast<double>(bxl * ayl - byl * axl);
        }
        if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return false;
        const double det = u + v + w;
        if (det == 0.0) return false;
        const double az = sz * a[kz], bz = sz * b[kz], cz = sz * c[kz];
        const double t_scaled = u * az + v * bz + w * cz;
        const double t = t_scaled / det;
        if (!(t > t_min && t < t_max)) return false;
        t_out = t;
        return true;
    }
};

}  // namespace

std::optional<Hit> TriangleMesh::local_intersect(const Ray &ray, double t_min, double t_max) const {
    const WatertightRay wr(ray);
    const Vec3 inv_d(1.0 / ray.d.x(), 1.0 / ray.d.y(), 1.0 / ray.d.z());
    uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    int best = -1;
    double best_t = t_max;
    while (sp > 0) {
        const Node &node = nodes_[stack[--sp]];
        if (!ray_box(node.box, ray.o, inv_d, t_min, best_t)) continue;
        if (node.count > 0) {
            for (uint32_t i = node.first; i < node.first + node.count; ++i) {
                const auto &tri = mesh_.triangles[order_[i]];
                double t;
                if (wr.intersect(mesh_.vertices[tri.v[0]], mesh_.vertices[tri.v[1]], mesh_.vertices[tri.v[2]],
                                 t_min, best_t, t)) {
                    best_t = t;
                    best = static_cast<int>(order_[i]);
                }
            }
        } else {
            const uint32_t left = static_cast<uint32_t>(&node - nodes_.data()) + 1;
            // Visit the near child first.
            if (ray.d[node.axis] > 0.0) {
                stack[sp++] = node.first;
                stack[sp++] = left;
            } else {
                stack[sp++] = left;
                stack[sp++] = node.first;
            }
        }
    }
    if (best < 0) return std::nullopt;
    const auto &tri = mesh_.triangles[best];
    const Vec3 &p0 = mesh_.vertices[tri.v[0]], &p1 = mesh_.vertices[tri.v[1]], &p2 = mesh_.vertices[tri.v[2]];
    Hit h;
    h.t = best_t;
    h.p = ray.at(best_t);
    h.n = (p1 - p0).cross(p2 - p0).normalized();
    h.inside = ray.d.dot(h.n) > 0.0;
    return h;
}

bool TriangleMesh::local_contains(const Vec3 &p) const {
    const Ray r{p, Vec3(0.48, 0.6, 0.64).normalized()};
    auto h = local_intersect(r, 0.0, std::numeric_limits<double>::infinity());
    return h && h->inside;
}

// --- Mesh generators ------------------------------------------------------------

MeshData make_icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    MeshData m;
    m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto &v : m.vertices) v.normalize();
    m.triangles = {{{0, 11, 5}}, {{0, 5, 1}},  {{0, 1, 7}},   {{0, 7, 10}}, {{0, 10, 11}},
                   {{1, 5, 9}},  {{5, 11, 4}}, {{11, 10, 2}}, {{10, 7, 6}}, {{7, 1, 8}},
                   {{3, 9, 4}},  {{3, 4, 2}},  {{3, 2, 6}},   {{3, 6, 8}},  {{3, 8, 9}},
                   {{4, 9, 5}},  {{2, 4, 11}}, {{6, 2, 10}},  {{8, 6, 7}},  {{9, 8, 1}}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<uint32_t, uint32_t>, uint32_t> midpoints;
        auto midpoint = [&](uint32_t a, uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = midpoints.find(key);
            if (it != midpoints.end()) return it->second;
            m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
            const auto idx = static_cast<uint32_t>(m.vertices.size() - 1);
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<Triangle> next;
        next.reserve(m.triangles.size() * 4);
        for (const auto &tri : m.triangles) {
            const uint32_t a = midpoint(tri.v[0], tri.v[1]);
            const uint32_t b = midpoint(tri.v[1], tri.v[2]);
            const uint32_t c = midpoint(tri.v[2], tri.v[0]);
            next.push_back({{tri.v[0], a, c}});
            next.push_back({{tri.v[1], b, a}});
            next.push_back({{tri.v[2], c, b}});
            next.push_back({{a, b, c}});
        }
        m.triangles = std::move(next);
    }
    for (auto &v : m.vertices) v *= radius;
    return m;
}

MeshData make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments) {
    if (!(major_radius > minor_radius && minor_radius > 0.0) || major_segments < 3 || minor_segments < 3)
        throw InputError("torus requires major > minor > 0 and at least 3 segments each way");
    MeshData m;
    for (int i = 0; i < major_segments; ++i) {
        const double u = 2.0 * kPi * i / major_segments;
        for (int j = 0; j < minor_segments; ++j) {
            const double v = 2.0 * kPi * j / minor_segments;
            const double r = major_radius + minor_radius * std::cos(v);
            m.vertices.emplace_back(r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v));
        }
    }
    auto idx = [&](int i, int j) {
        return static_cast<uint32_t>((i % major_segments) * minor_segments + (j % minor_segments));
    };
    for (int i = 0; i < major_segments; ++i) {
        for (int j = 0; j < minor_segments; ++j) {
            m.triangles.push_back({{idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)}});
            m.triangles.push_back({{idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)}});
        }
    }
    return m;
}

MeshData load_obj(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open OBJ file: " + path);
    MeshData m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x() >> v.y() >> v.z()))
                throw InputError(path + ":" + std::to_string(line_no) + ": malformed vertex");
            m.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<uint32_t> face;
            std::string tok;
            while (ls >> tok) {
                const long idx = std::stol(tok.substr(0, tok.find('/')));
                const long resolved = idx < 0 ? static_cast<long>(m.vertices.size()) + idx : idx - 1;
                if (resolved < 0 || resolved >= static_cast<long>(m.vertices.size()))
                    throw InputError(path + ":" + std::to_string(line_no) + ": face index out of range");
                face.push_back(static_cast<uint32_t>(resolved));
            }
            for (size_t k = 2; k < face.size(); ++k) m.triangles.push_back({{face[0], face[k - 1], face[k]}});
        }
    }
    return m;
}

}  // namespace polsss
