// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/scene.h"

#include "polsss/errors.h"
#include "json_reader.h"

#include <fstream>

namespace polsss {

using nlohmann::json;

// --- Camera ---------------------------------------------------------------------

Ray Camera::generate_ray(double px, double py) const {
    const double tan_half = std::tan(0.5 * deg_to_rad(vfov_deg));
    const double aspect = static_cast<double>(width) / height;
    const double xc = (2.0 * px / width - 1.0) * tan_half * aspect;
    const double yc = (2.0 * py / height - 1.0) * tan_half;
    const Vec3 f = forward(), r = right(), d = down();
    return {position, (f + xc * r + yc * d).normalized()};
}

Vec3 Camera::to_camera_dir(const Vec3 &w) const { return {w.dot(right()), w.dot(down()), w.dot(forward())}; }

void Camera::validate() const {
    if (width <= 0 || height <= 0) throw InputError("camera resolution must be positive");
    if (!(vfov_deg > 0.0 && vfov_deg < 180.0)) throw InputError("camera vfov must lie in (0, 180) degrees");
    if ((look_at - position).norm() <= 0.0) throw InputError("camera look_at coincides with position");
    if (forward().cross(up).norm() < 1e-9) throw InputError("camera up is parallel to the view direction");
}

// --- Spherical harmonics ----------------------------------------------------------

std::array<double, kShCount> sh_basis_all(const Vec3 &d) {
    const double x = d.x(), y = d.y(), z = d.z();
    return {0.282094791773878,
            0.488602511902920 * y,
            0.488602511902920 * z,
            0.488602511902920 * x,
            1.092548430592079 * x * y,
            1.092548430592079 * y * z,
            0.315391565252520 * (3.0 * z * z - 1.0),
            1.092548430592079 * x * z,
            0.546274215296040 * (x * x - y * y)};
}

double sh_basis(int k, const Vec3 &d) { return sh_basis_all(d).at(k); }

double SHEnvironment::eval_unclamped(const Vec3 &dir, int channel) const {
    const auto b = sh_basis_all(dir);
    double v = 0.0;
    for (int k = 0; k < kShCount; ++k) v += coeffs[channel][k] * b[k];
    return v;
}

double SHEnvironment::eval(const Vec3 &dir, int channel) const {
    return std::max(0.0, eval_unclamped(dir, channel));
}

Rgb SHEnvironment::eval(const Vec3 &dir) const {
    const auto b = sh_basis_all(dir);
    Rgb out{};
    for (int c = 0; c < 3; ++c) {
        double v = 0.0;
        for (int k = 0; k < kShCount; ++k) v += coeffs[c][k] * b[k];
        out[c] = std::max(0.0, v);
    }
    return out;
}

SHEnvironment SHEnvironment::constant(double l) {
    SHEnvironment e;
    for (auto &c : e.coeffs) c[0] = l * std::sqrt(4.0 * kPi);
    return e;
}

// --- Shapes -----------------------------------------------------------------------

std::shared_ptr<const Shape> ShapeSpec::build() const {
    const Pose pose = Pose::from_euler_deg(rotation_deg, translation);
    switch (kind) {
        case ShapeKind::Sphere: return std::make_shared<Sphere>(radius, pose);
        case ShapeKind::RoundedBox: return std::make_shared<RoundedBox>(half, radius, pose);
        case ShapeKind::Superquadric: return std::make_shared<Superquadric>(axes, e1, e2, pose);
        case ShapeKind::TriangleMesh: {
            MeshData mesh;
            if (mesh_source == "icosphere")
                mesh = make_icosphere(subdivisions, radius);
            else if (mesh_source == "torus")
                mesh = make_torus(major_radius, minor_radius, 48, 24);
            else if (mesh_source == "obj")
                mesh = load_obj(obj_path);
            else
                throw InputError("unknown mesh source '" + mesh_source + "'");
            return std::make_shared<TriangleMesh>(std::move(mesh), pose);
        }
    }
    throw InputError("unknown shape kind");
}

void Scene::finalize() {
    shape = shape_spec.build();
    camera.validate();
    medium.validate();
    interface.validate();
    if (shape->contains(camera.position)) throw InputError("camera lies inside the shape");
    if (has_flash) {
        if (!(flash.radius > 0.0)) throw InputError("flash radius must be positive");
        if (!(flash.intensity >= 0.0)) throw InputError("flash intensity must be non-negative");
        const double gap = (flash.center - shape->bound_center()).norm() - shape->bound_radius();
        if (gap <= flash.radius) throw InputError("flash sphere intersects the shape bounds");
    }
}

// --- JSON -------------------------------------------------------------------------

namespace {

using detail::Reader;

ShapeSpec read_shape(const Reader &r) {
    ShapeSpec s;
    const std::string kind = r.child("kind").string();
    if (r.has("rotation_deg")) s.rotation_deg = r.child("rotation_deg").vec3();
    if (r.has("translation")) s.translation = r.child("translation").vec3();
    auto positive = [](const Reader &c) {
        const double v = c.number();
        if (!(v > 0.0)) throw SchemaError(c.pointer(), "must be positive");
        return v;
    };
    if (kind == "sphere") {
        r.only_keys({"kind", "radius", "rotation_deg", "translation"});
        s.kind = ShapeKind::Sphere;
        s.radius = positive(r.child("radius"));
    } else if (kind == "rounded_box") {
        r.only_keys({"kind", "half", "radius", "rotation_deg", "translation"});
        s.kind = ShapeKind::RoundedBox;
        s.half = r.child("half").vec3();
        s.radius = positive(r.child("radius"));
        if (s.half.minCoeff() < 0.0) throw SchemaError(r.pointer() + "/half", "must be non-negative");
    } else if (kind == "superquadric") {
        r.only_keys({"kind", "axes", "e1", "e2", "rotation_deg", "translation"});
        s.kind = ShapeKind::Superquadric;
        s.axes = r.child("axes").vec3();
        s.e1 = r.child("e1").number();
        s.e2 = r.child("e2").number();
        if (s.axes.minCoeff() <= 0.0) throw SchemaError(r.pointer() + "/axes", "must be positive");
        if (!(s.e1 > 0.0 && s.e1 <= 2.0)) throw SchemaError(r.pointer() + "/e1", "must lie in (0, 2]");
        if (!(s.e2 > 0.0 && s.e2 <= 2.0)) throw SchemaError(r.pointer() + "/e2", "must lie in (0, 2]");
    } else if (kind == "triangle_mesh") {
        r.only_keys({"kind", "source", "subdivisions", "radius", "major_radius", "minor_radius", "path",
                     "rotation_deg", "translation"});
        s.kind = ShapeKind::TriangleMesh;
        s.mesh_source = r.child("source").string();
        if (s.mesh_source == "icosphere") {
            s.subdivisions = r.has("subdivisions") ? r.child("subdivisions").integer() : 4;
            s.radius = positive(r.child("radius"));
            if (s.subdivisions < 0 || s.subdivisions > 7)
                throw SchemaError(r.pointer() + "/subdivisions", "must lie in [0, 7]");
        } else if (s.mesh_source == "torus") {
            s.major_radius = positive(r.child("major_radius"));
            s.minor_radius = positive(r.child("minor_radius"));
            if (s.minor_radius >= s.major_radius)
                throw SchemaError(r.pointer() + "/minor_radius", "must be smaller than major_radius");
        } else if (s.mesh_source == "obj") {
            s.obj_path = r.child("path").string();
        } else {
            throw SchemaError(r.pointer() + "/source", "expected icosphere, torus or obj");
        }
    } else {
        throw SchemaError(r.pointer() + "/kind", "unknown shape kind '" + kind + "'");
    }
    return s;
}

json vec_json(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Scene scene_from_json(const json &j) {
    const Reader root(j, "");
    root.only_keys({"shape", "camera", "env_sh", "flash", "medium", "eta", "seed"});
    Scene s;
    s.shape_spec = read_shape(root.child("shape"));

    const Reader cam = root.child("camera");
    cam.only_keys({"position", "look_at", "up", "vfov_deg", "width", "height"});
    s.camera.position = cam.child("position").vec3();
    s.camera.look_at = cam.child("look_at").vec3();
    if (cam.has("up")) s.camera.up = cam.child("up").vec3();
    s.camera.vfov_deg = cam.child("vfov_deg").number();
    s.camera.width = cam.child("width").integer();
    s.camera.height = cam.child("height").integer();
    if (s.camera.width <= 0) throw SchemaError("/camera/width", "must be positive");
    if (s.camera.height <= 0) throw SchemaError("/camera/height", "must be positive");
    if (!(s.camera.vfov_deg > 0.0 && s.camera.vfov_deg < 180.0))
        throw SchemaError("/camera/vfov_deg", "must lie in (0, 180)");

    const Reader env = root.child("env_sh");
    env.array_of(3);
    for (size_t c = 0; c < 3; ++c) {
        const Reader ch = env.element(c);
        ch.array_of(kShCount);
        for (size_t k = 0; k < kShCount; ++k) s.env.coeffs[c][k] = ch.element(k).number();
    }

    if (root.has("flash") && !j.at("flash").is_null()) {
        const Reader fl = root.child("flash");
        fl.only_keys({"position", "offset", "radius", "intensity"});
        if (fl.has("position")) {
            s.flash.center = fl.child("position").vec3();
        } else {
            const Vec3 off = fl.has("offset") ? fl.child("offset").vec3() : Vec3(0.02, 0.0, 0.0);
            const Camera &c = s.camera;
            s.flash.center = c.position + off.x() * c.right() + off.y() * c.down() + off.z() * c.forward();
        }
        s.flash.radius = fl.has("radius") ? fl.child("radius").number() : 0.01;
        s.flash.intensity = fl.child("intensity").number();
        if (!(s.flash.radius > 0.0)) throw SchemaError("/flash/radius", "must be positive");
        if (!(s.flash.intensity >= 0.0)) throw SchemaError("/flash/intensity", "must be non-negative");
        s.has_flash = true;
    } else {
        s.has_flash = false;
    }

    const Reader med = root.child("medium");
    med.only_keys({"sigma_t", "albedo", "g"});
    s.medium.sigma_t = med.child("sigma_t").rgb();
    s.medium.albedo = med.child("albedo").rgb();
    s.medium.g = med.child("g").number();
    for (int c = 0; c < 3; ++c) {
        if (!(s.medium.sigma_t[c] > 0.0))
            throw SchemaError("/medium/sigma_t/" + std::to_string(c), "must be positive");
        if (!(s.medium.albedo[c] >= 0.0 && s.medium.albedo[c] <= 1.0))
            throw SchemaError("/medium/albedo/" + std::to_string(c), "must lie in [0, 1]");
    }
    if (!(s.medium.g > -1.0 && s.medium.g < 1.0)) throw SchemaError("/medium/g", "must lie in (-1, 1)");

    s.interface.eta = root.has("eta") ? root.child("eta").number() : kDefaultEta;
    if (!(s.interface.eta > 0.0)) throw SchemaError("/eta", "must be positive");
    if (root.has("seed")) s.seed = root.child("seed").uint64();

    try {
        s.finalize();
    } catch (const InputError &e) {
        throw SchemaError("", e.what());
    }
    return s;
}

json scene_to_json(const Scene &s) {
    json shape;
    const ShapeSpec &sp = s.shape_spec;
    shape["kind"] = to_string(sp.kind);
    switch (sp.kind) {
        case ShapeKind::Sphere: shape["radius"] = sp.radius; break;
        case ShapeKind::RoundedBox:
            shape["half"] = vec_json(sp.half);
            shape["radius"] = sp.radius;
            break;
        case ShapeKind::Superquadric:
            shape["axes"] = vec_json(sp.axes);
            shape["e1"] = sp.e1;
            shape["e2"] = sp.e2;
            break;
        case ShapeKind::TriangleMesh:
            shape["source"] = sp.mesh_source;
            if (sp.mesh_source == "icosphere") {
                shape["subdivisions"] = sp.subdivisions;
                shape["radius"] = sp.radius;
            } else if (sp.mesh_source == "torus") {
                shape["major_radius"] = sp.major_radius;
                shape["minor_radius"] = sp.minor_radius;
            } else {
                shape["path"] = sp.obj_path;
            }
            break;
    }
    shape["rotation_deg"] = vec_json(sp.rotation_deg);
    shape["translation"] = vec_json(sp.translation);

    json j;
    j["shape"] = shape;
    j["camera"] = {{"position", vec_json(s.camera.position)}, {"look_at", vec_json(s.camera.look_at)},
                   {"up", vec_json(s.camera.up)},             {"vfov_deg", s.camera.vfov_deg},
                   {"width", s.camera.width},                 {"height", s.camera.height}};
    j["env_sh"] = s.env.coeffs;
    if (s.has_flash)
        j["flash"] = {{"position", vec_json(s.flash.center)},
                      {"radius", s.flash.radius},
                      {"intensity", s.flash.intensity}};
    else
        j["flash"] = nullptr;
    j["medium"] = {{"sigma_t", s.medium.sigma_t}, {"albedo", s.medium.albedo}, {"g", s.medium.g}};
    j["eta"] = s.interface.eta;
    j["seed"] = s.seed;
    return j;
}

Scene load_scene(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open scene file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return scene_from_json(j);
}

// --- Ground truth -------------------------------------------------------------------

SceneGT gt_maps(const Scene &scene) {
    const Camera &cam = scene.camera;
    SceneGT gt{ImageD(cam.width, cam.height), ImageD(cam.width, cam.height), Mask(cam.width, cam.height)};
    const Vec3 f = cam.forward();
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const Ray r = cam.generate_ray(x + 0.5, y + 0.5);
            auto hit = scene.shape->intersect(r);
            if (!hit) continue;
            gt.mask.set(x, y, true);
            const Vec3 n = cam.to_camera_dir(hit->n);
            const double depth = (hit->p - cam.position).dot(f);
            for (int c = 0; c < 3; ++c) {
                gt.normal.at(x, y, c) = n[c];
                gt.depth.at(x, y, c) = depth;
            }
        }
    }
    return gt;
}

Scene canonical_scene(int resolution) {
    Scene s;
    s.shape_spec.kind = ShapeKind::Sphere;
    s.shape_spec.radius = 0.05;
    s.camera.position = Vec3(0.0, 0.0, 0.3);
    s.camera.look_at = Vec3::Zero();
    s.camera.vfov_deg = 30.0;
    s.camera.width = s.camera.height = resolution;
    // Warm overhead light with a cooler fill from the side.
    const double c00 = std::sqrt(4.0 * kPi);
    s.env.coeffs = {{{1.0 * c00, 0.45 * c00, 0.10 * c00, 0.15 * c00, 0.0, 0.0, -0.08 * c00, 0.0, 0.05 * c00},
                     {0.9 * c00, 0.40 * c00, 0.10 * c00, 0.10 * c00, 0.0, 0.0, -0.08 * c00, 0.0, 0.05 * c00},
                     {0.8 * c00, 0.30 * c00, 0.10 * c00, 0.05 * c00, 0.0, 0.0, -0.06 * c00, 0.0, 0.04 * c00}}};
    s.flash.center = s.camera.position + 0.02 * s.camera.right();
    s.flash.radius = 0.01;
    s.flash.intensity = 8.0;
    s.medium.sigma_t = {60.0, 60.0, 60.0};
    s.medium.albedo = {0.9, 0.8, 0.7};
    s.medium.g = 0.3;
    s.seed = 7;
    s.finalize();
    return s;
}

}  // namespace polsss
