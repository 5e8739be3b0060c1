// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/errors.h"
#include "polsss/rng.h"
#include "polsss/shape.h"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace polsss;

namespace {

Vec3 random_unit(Pcg32 &rng) {
    const double z = 1.0 - 2.0 * rng.uniform();
    const double r = safe_sqrt(1.0 - z * z), phi = 2.0 * kPi * rng.uniform();
    return {r * std::cos(phi), r * std::sin(phi), z};
}

double signed_volume(const MeshData &m) {
    double v = 0.0;
    for (const Triangle &t : m.triangles)
        v += m.vertices[t.v[0]].dot(m.vertices[t.v[1]].cross(m.vertices[t.v[2]])) / 6.0;
    return v;
}

}  // namespace

TEST_SUITE("shape") {

TEST_CASE("unit sphere seen from z = -3") {
    const Sphere s(1.0);
    const auto hit = s.intersect({Vec3(0, 0, -3), Vec3(0, 0, 1)});
    REQUIRE(hit);
    CHECK(hit->t == doctest::Approx(2.0).epsilon(1e-12));
    CHECK((hit->n - Vec3(0, 0, -1)).norm() < 1e-12);
    CHECK_FALSE(hit->inside);

    const auto exit = s.intersect({Vec3(0, 0, 0), Vec3(0, 0, 1)});
    REQUIRE(exit);
    CHECK(exit->t == doctest::Approx(1.0));
    CHECK(exit->inside);
    CHECK((exit->facing_normal() - Vec3(0, 0, -1)).norm() < 1e-12);

    CHECK_FALSE(s.intersect({Vec3(0, 2, -3), Vec3(0, 0, 1)}));
    CHECK_FALSE(s.intersect({Vec3(0, 0, -3), Vec3(0, 0, 1)}, 1.5));
    CHECK_THROWS_AS(s.intersect({Vec3(0, 0, -3), Vec3(0, 0, 2)}), RefusalError);
    CHECK_THROWS_AS(s.intersect({Vec3(0, 0, -3), Vec3(0, 0, std::nan(""))}), RefusalError);
}

TEST_CASE("posed sphere") {
    const Sphere s(0.5, Pose::from_euler_deg(Vec3(10, 20, 30), Vec3(1, 2, 3)));
    const auto hit = s.intersect({Vec3(1, 2, 0), Vec3(0, 0, 1)});
    REQUIRE(hit);
    CHECK(hit->t == doctest::Approx(2.5));
    CHECK(s.contains(Vec3(1, 2, 3.4)));
    CHECK_FALSE(s.contains(Vec3(1, 2, 3.6)));
}

TEST_CASE("implicit shapes land on their zero set with consistent normals") {
    Pcg32 rng(9);
    const RoundedBox box(Vec3(0.3, 0.2, 0.1), 0.05, Pose::from_euler_deg(Vec3(15, -25, 40), Vec3(0.1, 0, 0)));
    const Superquadric sq(Vec3(0.4, 0.3, 0.25), 0.5, 1.5, Pose::from_euler_deg(Vec3(-5, 35, 10), Vec3(0, 0.1, 0)));
    for (const ConvexImplicit *shape : {static_cast<const ConvexImplicit *>(&box), static_cast<const ConvexImplicit *>(&sq)}) {
        int hits = 0;
        for (int i = 0; i < 2000; ++i) {
            const Vec3 dir = random_unit(rng);
            const Vec3 origin = shape->bound_center() - 2.0 * dir + 0.2 * random_unit(rng);
            const auto hit = shape->intersect({origin, dir});
            if (!hit) continue;
            ++hits;
            const Vec3 local = shape->pose().to_local_point(hit->p);
            CHECK(std::abs(shape->field(local)) < 1e-6);
            CHECK(hit->n.dot(dir) <= 1e-9);
            CHECK(hit->n.norm() == doctest::Approx(1.0));
            // The interior lies behind the outward normal.
            CHECK(shape->contains(hit->p - 1e-4 * hit->n));
            CHECK_FALSE(shape->contains(hit->p + 1e-4 * hit->n));
            // The exit from the hit point is on the far side.
            const auto exit = shape->intersect({hit->p + 1e-7 * dir, dir});
            REQUIRE(exit);
            CHECK(exit->inside);
            CHECK(exit->n.dot(dir) > -1e-9);
        }
        CHECK(hits > 100);
    }
}

TEST_CASE("icosphere is a watertight outward-oriented closed manifold") {
    const MeshData mesh = make_icosphere(3, 1.0);
    CHECK(mesh.triangles.size() == 1280);
    CHECK(signed_volume(mesh) > 0.95 * 4.0 / 3.0 * kPi);
    CHECK(signed_volume(mesh) < 4.0 / 3.0 * kPi);
    const TriangleMesh shape(mesh);
    CHECK(shape.is_closed_manifold());

    // Every ray from an interior point must leave through the surface. Aim a
    // share of them exactly at vertices and edge midpoints.
    Pcg32 rng(2024);
    long misses = 0, outward_violations = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const Vec3 origin = 0.5 * std::cbrt(rng.uniform()) * random_unit(rng);
        Vec3 target;
        const int kind = i % 4;
        if (kind == 0) {
            target = mesh.vertices[rng.next_u32() % mesh.vertices.size()];
        } else if (kind == 1) {
            const Triangle &t = mesh.triangles[rng.next_u32() % mesh.triangles.size()];
            target = 0.5 * (mesh.vertices[t.v[0]] + mesh.vertices[t.v[1]]);
        } else {
            target = origin + random_unit(rng);
        }
        const Vec3 dir = (target - origin).normalized();
        const auto hit = shape.intersect({origin, dir});
        if (!hit) {
            ++misses;
            continue;
        }
        if (!hit->inside || hit->n.dot(dir) < 0.0) ++outward_violations;
    }
    CHECK(misses == 0);
    CHECK(outward_violations == 0);
}

TEST_CASE("torus mesh") {
    const MeshData mesh = make_torus(0.3, 0.1, 48, 24);
    const TriangleMesh shape(mesh);
    CHECK(shape.is_closed_manifold());
    const double exact = 2.0 * kPi * kPi * 0.3 * 0.1 * 0.1;
    CHECK(signed_volume(mesh) == doctest::Approx(exact).epsilon(0.02));
    CHECK(shape.contains(Vec3(0.3, 0, 0)));
    CHECK_FALSE(shape.contains(Vec3(0, 0, 0)));
    // A ray down the axis passes through the hole.
    CHECK_FALSE(shape.intersect({Vec3(0, 0, -1), Vec3(0, 0, 1)}));
    // A ray through the tube crosses four surfaces.
    Ray r{Vec3(-1, 0.013, 0.011), Vec3(1, 0, 0)};
    int crossings = 0;
    double t = 0.0;
    while (auto hit = shape.intersect(r, std::numeric_limits<double>::infinity(), t + 1e-9)) {
        t = hit->t;
        ++crossings;
    }
    CHECK(crossings == 4);
}

TEST_CASE("OBJ loading") {
    const auto dir = std::filesystem::temp_directory_path() / "polsss_shape_test";
    std::filesystem::create_directories(dir);
    const MeshData ico = make_icosphere(1, 0.5);
    {
        std::ofstream f(dir / "ico.obj");
        f << "# icosphere\n";
        for (const Vec3 &v : ico.vertices) f << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
        for (const Triangle &t : ico.triangles) f << "f " << t.v[0] + 1 << "/1 " << t.v[1] + 1 << "//2 " << t.v[2] + 1 << '\n';
    }
    const MeshData back = load_obj((dir / "ico.obj").string());
    REQUIRE(back.vertices.size() == ico.vertices.size());
    REQUIRE(back.triangles.size() == ico.triangles.size());
    for (size_t i = 0; i < ico.triangles.size(); ++i) CHECK(back.triangles[i].v == ico.triangles[i].v);
    CHECK(signed_volume(back) == doctest::Approx(signed_volume(ico)).epsilon(1e-5));

    {
        std::ofstream f(dir / "quad.obj");
        f << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    }
    CHECK(load_obj((dir / "quad.obj").string()).triangles.size() == 2);
    {
        std::ofstream f(dir / "bad.obj");
        f << "v 0 0 0\nf 1 2 3\n";
    }
    CHECK_THROWS_AS(load_obj((dir / "bad.obj").string()), InputError);
    CHECK_THROWS_AS(load_obj((dir / "missing.obj").string()), NotFoundError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
