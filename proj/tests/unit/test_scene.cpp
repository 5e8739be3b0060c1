// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/errors.h"
#include "polsss/rng.h"
#include "polsss/scene.h"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace polsss;
using nlohmann::json;

namespace {

// Real SH without the Condon-Shortley phase, from associated Legendre functions.
double sh_oracle(int l, int m, const Vec3 &d) {
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    const double phi = std::atan2(d.y(), d.x());
    const int am = std::abs(m);
    double ratio = 1.0;
    for (int k = l - am + 1; k <= l + am; ++k) ratio /= k;
    const double norm = std::sqrt((2 * l + 1) / (4.0 * kPi) * ratio);
    const double p = std::assoc_legendre(l, am, std::cos(theta));
    if (m == 0) return norm * p;
    return std::sqrt(2.0) * norm * p * (m > 0 ? std::cos(am * phi) : std::sin(am * phi));
}

std::string error_pointer(const json &doc) {
    try {
        scene_from_json(doc);
    } catch (const SchemaError &e) {
        return e.pointer();
    }
    return "<no error>";
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("SH basis matches the Legendre oracle") {
    Pcg32 rng(3);
    const std::array<std::pair<int, int>, kShCount> lm = {
        {{0, 0}, {1, -1}, {1, 0}, {1, 1}, {2, -2}, {2, -1}, {2, 0}, {2, 1}, {2, 2}}};
    for (int i = 0; i < 100; ++i) {
        const double z = 1.0 - 2.0 * rng.uniform(), phi = 2.0 * kPi * rng.uniform();
        const Vec3 d(std::sqrt(1 - z * z) * std::cos(phi), std::sqrt(1 - z * z) * std::sin(phi), z);
        for (int k = 0; k < kShCount; ++k)
            CHECK(sh_basis(k, d) == doctest::Approx(sh_oracle(lm[k].first, lm[k].second, d)).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("constant environment evaluates to its radiance") {
    const SHEnvironment env = SHEnvironment::constant(1.7);
    Pcg32 rng(4);
    for (int i = 0; i < 50; ++i) {
        const Vec3 d = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
        for (int c = 0; c < 3; ++c) CHECK(env.eval(d, c) == doctest::Approx(1.7).epsilon(1e-12));
    }
}

TEST_CASE("negative environment lobes are clamped") {
    SHEnvironment env;
    for (auto &c : env.coeffs) c[2] = 1.0;  // pure z dipole
    CHECK(env.eval(Vec3(0, 0, -1), 0) == 0.0);
    CHECK(env.eval_unclamped(Vec3(0, 0, -1), 0) < 0.0);
    CHECK(env.eval(Vec3(0, 0, 1), 0) > 0.0);
}

TEST_CASE("canonical ground truth") {
    const Scene s = canonical_scene(128);
    const SceneGT gt = gt_maps(s);

    // The four pixels around the image centre average to a normal facing the camera.
    for (int c = 0; c < 3; ++c) {
        const double avg = 0.25 * (gt.normal.at(63, 63, c) + gt.normal.at(64, 63, c) + gt.normal.at(63, 64, c) +
                                   gt.normal.at(64, 64, c));
        CHECK(avg == doctest::Approx(Vec3(0, 0, -1)[c]).epsilon(1e-3).scale(1.0));
    }

    // Silhouette: a disc of radius tan(asin(r / d)) in normalised image units.
    const double half = std::tan(deg_to_rad(s.camera.vfov_deg) / 2.0);
    const double radius_px = 64.0 * std::tan(std::asin(0.05 / 0.3)) / half;
    const double area = kPi * radius_px * radius_px;
    CHECK(static_cast<double>(gt.mask.count()) == doctest::Approx(area).epsilon(0.02));

    // Background is zero; foreground depth between near and far points.
    int bad = 0;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            const double d = gt.depth.at(x, y, 0);
            if (!gt.mask(x, y)) bad += d != 0.0 || gt.normal.at(x, y, 2) != 0.0;
            else bad += !(d > 0.25 - 1e-9 && d < 0.3);
        }
    CHECK(bad == 0);
    CHECK(gt.depth.at(64, 64, 0) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("normals agree with finite differences of the depth map") {
    for (const char *kind : {"sphere", "rounded_box"}) {
        CAPTURE(kind);
        Scene s = canonical_scene(128);
        if (std::string(kind) == "rounded_box") {
            s.shape_spec.kind = ShapeKind::RoundedBox;
            s.shape_spec.half = Vec3(0.025, 0.02, 0.015);
            s.shape_spec.radius = 0.015;
            s.shape_spec.rotation_deg = Vec3(20, 30, 10);
            s.finalize();
        }
        const SceneGT gt = gt_maps(s);
        const Camera &cam = s.camera;
        auto point = [&](int x, int y) {
            const Ray r = cam.generate_ray(x + 0.5, y + 0.5);
            const double t = gt.depth.at(x, y, 0) / r.d.dot(cam.forward());
            return Vec3(r.o + t * r.d);
        };
        std::vector<double> errors;
        for (int y = 1; y < 127; ++y)
            for (int x = 1; x < 127; ++x) {
                bool interior = true;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) interior = interior && gt.mask(x + dx, y + dy);
                if (!interior) continue;
                const Vec3 tx = point(x + 1, y) - point(x - 1, y);
                const Vec3 ty = point(x, y + 1) - point(x, y - 1);
                Vec3 n = cam.to_camera_dir(tx.cross(ty).normalized());
                const Vec3 ref(gt.normal.at(x, y, 0), gt.normal.at(x, y, 1), gt.normal.at(x, y, 2));
                if (n.dot(ref) < 0.0) n = -n;
                errors.push_back(rad_to_deg(std::acos(std::clamp(n.dot(ref), -1.0, 1.0))));
            }
        REQUIRE(errors.size() > 1000);
        std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
        CHECK(errors[errors.size() / 2] <= 3.0);
    }
}

TEST_CASE("scene documents round trip") {
    const Scene s = canonical_scene(64);
    const json doc = scene_to_json(s);
    const Scene back = scene_from_json(doc);
    CHECK(scene_to_json(back) == doc);
    CHECK(back.shape_spec == s.shape_spec);
    CHECK(back.medium == s.medium);
    CHECK(back.env.coeffs == s.env.coeffs);
    CHECK((back.flash.center - s.flash.center).norm() == 0.0);

    const auto path = std::filesystem::temp_directory_path() / "polsss_scene_test.json";
    std::ofstream(path) << doc.dump(2);
    CHECK(scene_to_json(load_scene(path.string())) == doc);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), NotFoundError);
}

TEST_CASE("flash offset is expressed in the camera frame") {
    json doc = scene_to_json(canonical_scene(32));
    doc["flash"] = {{"offset", {0.0, -0.03, 0.0}}, {"intensity", 2.0}};
    const Scene s = scene_from_json(doc);
    // Image down is world -y for the canonical camera.
    CHECK((s.flash.center - Vec3(0.0, 0.03, 0.3)).norm() < 1e-12);
}

TEST_CASE("schema violations name the offending field") {
    const json good = scene_to_json(canonical_scene(32));
    json doc = good;
    doc["medium"]["albedo"][1] = 1.5;
    CHECK(error_pointer(doc) == "/medium/albedo/1");
    doc = good;
    doc["medium"]["g"] = 1.0;
    CHECK(error_pointer(doc) == "/medium/g");
    doc = good;
    doc["camera"]["width"] = -3;
    CHECK(error_pointer(doc) == "/camera/width");
    doc = good;
    doc["env_sh"][2] = json::array({1.0, 2.0});
    CHECK(error_pointer(doc).rfind("/env_sh/2", 0) == 0);
    doc = good;
    doc["shape"]["kind"] = "teapot";
    CHECK(error_pointer(doc) == "/shape/kind");
    doc = good;
    doc["colour"] = 1;
    CHECK(error_pointer(doc) == "/colour");
    doc = good;
    doc["medium"].erase("sigma_t");
    CHECK(error_pointer(doc) == "/medium/sigma_t");
    doc = good;
    doc["camera"]["position"] = {0.0, 0.0, 0.0};  // inside the sphere
    CHECK_THROWS_AS(scene_from_json(doc), SchemaError);
}

TEST_CASE("shape library entries build") {
    for (const char *kind : {"sphere", "rounded_box", "superquadric", "triangle_mesh"}) {
        CAPTURE(kind);
        json doc = scene_to_json(canonical_scene(32));
        doc["shape"] = {{"kind", kind}};
        if (std::string(kind) == "sphere") doc["shape"]["radius"] = 0.04;
        if (std::string(kind) == "rounded_box") doc["shape"].update({{"half", {0.02, 0.02, 0.02}}, {"radius", 0.01}});
        if (std::string(kind) == "superquadric") doc["shape"].update({{"axes", {0.04, 0.03, 0.03}}, {"e1", 0.5}, {"e2", 1.0}});
        if (std::string(kind) == "triangle_mesh") doc["shape"].update({{"source", "torus"}, {"major_radius", 0.04}, {"minor_radius", 0.015}});
        const Scene s = scene_from_json(doc);
        CHECK(gt_maps(s).mask.count() > 20);
    }
}

}  // TEST_SUITE
