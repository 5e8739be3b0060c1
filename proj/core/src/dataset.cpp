// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/dataset.h"

#include "json_reader.h"
#include "polsss/errors.h"
#include "polsss/pfm.h"
#include "polsss/rng.h"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace fs = std::filesystem;

namespace polsss {

using nlohmann::json;

// --- Hashing ----------------------------------------------------------------------

std::string sha256_hex(const std::vector<unsigned char> &bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    static const char *hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

namespace {

std::vector<unsigned char> read_bytes(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("file not found: " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string sha256_file(const std::string &path) { return sha256_hex(read_bytes(path)); }

void write_file_atomic(const std::string &path, const std::string &content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError("cannot open '" + tmp + "' for writing");
        f << content;
        if (!f) throw InputError("write failed for '" + tmp + "'");
    }
    fs::rename(tmp, path);
}

// --- Sampling ranges --------------------------------------------------------------

void SamplingRanges::validate() const {
    if (!(sigma_t_min > 0.0 && sigma_t_min <= sigma_t_max)) throw InputError("ranges: invalid sigma_t range");
    if (!(albedo_min >= 0.0 && albedo_min <= albedo_max && albedo_max <= 1.0))
        throw InputError("ranges: invalid albedo range");
    if (!(g_min > -1.0 && g_min <= g_max && g_max < 1.0)) throw InputError("ranges: invalid g range");
    if (shapes.empty()) throw InputError("ranges: empty shape library");
    for (const auto &s : shapes)
        if (s != "sphere" && s != "rounded_box" && s != "superquadric" && s != "icosphere" && s != "torus")
            throw InputError("ranges: unknown shape '" + s + "'");
    if (!(env_mean_min > 0.0 && env_mean_min <= env_mean_max)) throw InputError("ranges: invalid env mean range");
    if (!(higher_order >= 0.0)) throw InputError("ranges: higher_order must be non-negative");
    if (!(flash_ratio_min >= 0.0 && flash_ratio_min <= flash_ratio_max))
        throw InputError("ranges: invalid flash ratio range");
    if (max_rejections < 1) throw InputError("ranges: max_rejections must be positive");
    if (preview_resolution < 1 || preview_spp < 1) throw InputError("ranges: invalid preview settings");
}

namespace {

std::pair<double, double> read_range(const detail::Reader &r, const std::string &key, std::pair<double, double> def) {
    if (!r.has(key)) return def;
    const detail::Reader c = r.child(key);
    c.array_of(2);
    return {c.element(0).number(), c.element(1).number()};
}

}  // namespace

SamplingRanges ranges_from_json(const json &j) {
    const detail::Reader root(j, "");
    root.only_keys({"sigma_t", "albedo", "g", "shapes", "env_mean", "higher_order", "flash_ratio", "min_mean_s0",
                    "max_rejections", "preview_resolution", "preview_spp"});
    SamplingRanges r;
    std::tie(r.sigma_t_min, r.sigma_t_max) = read_range(root, "sigma_t", {r.sigma_t_min, r.sigma_t_max});
    std::tie(r.albedo_min, r.albedo_max) = read_range(root, "albedo", {r.albedo_min, r.albedo_max});
    std::tie(r.g_min, r.g_max) = read_range(root, "g", {r.g_min, r.g_max});
    std::tie(r.env_mean_min, r.env_mean_max) = read_range(root, "env_mean", {r.env_mean_min, r.env_mean_max});
    std::tie(r.flash_ratio_min, r.flash_ratio_max) =
        read_range(root, "flash_ratio", {r.flash_ratio_min, r.flash_ratio_max});
    if (root.has("shapes")) {
        const detail::Reader s = root.child("shapes");
        if (!j.at("shapes").is_array()) throw SchemaError("/shapes", "expected an array");
        r.shapes.clear();
        for (size_t i = 0; i < j.at("shapes").size(); ++i) r.shapes.push_back(s.element(i).string());
    }
    if (root.has("higher_order")) r.higher_order = root.child("higher_order").number();
    if (root.has("min_mean_s0")) r.min_mean_s0 = root.child("min_mean_s0").number();
    if (root.has("max_rejections")) r.max_rejections = root.child("max_rejections").integer();
    if (root.has("preview_resolution")) r.preview_resolution = root.child("preview_resolution").integer();
    if (root.has("preview_spp")) r.preview_spp = root.child("preview_spp").integer();
    try {
        r.validate();
    } catch (const InputError &e) {
        throw SchemaError("", e.what());
    }
    return r;
}

json ranges_to_json(const SamplingRanges &r) {
    return {{"sigma_t", {r.sigma_t_min, r.sigma_t_max}},
            {"albedo", {r.albedo_min, r.albedo_max}},
            {"g", {r.g_min, r.g_max}},
            {"shapes", r.shapes},
            {"env_mean", {r.env_mean_min, r.env_mean_max}},
            {"higher_order", r.higher_order},
            {"flash_ratio", {r.flash_ratio_min, r.flash_ratio_max}},
            {"min_mean_s0", r.min_mean_s0},
            {"max_rejections", r.max_rejections},
            {"preview_resolution", r.preview_resolution},
            {"preview_spp", r.preview_spp}};
}

SamplingRanges load_ranges(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open ranges file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return ranges_from_json(j);
}

// --- Scene sampling ---------------------------------------------------------------

namespace {

double uniform_in(Pcg32 &rng, double lo, double hi) {
    const double u = rng.uniform();
    return lo == hi ? lo : lo + u * (hi - lo);
}

double log_uniform_in(Pcg32 &rng, double lo, double hi) {
    const double u = rng.uniform();
    return lo == hi ? lo : std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

ShapeSpec sample_shape(Pcg32 &rng, const std::string &name) {
    ShapeSpec s;
    if (name == "sphere") {
        s.kind = ShapeKind::Sphere;
        s.radius = uniform_in(rng, 0.035, 0.06);
    } else if (name == "rounded_box") {
        s.kind = ShapeKind::RoundedBox;
        s.half = Vec3(uniform_in(rng, 0.02, 0.04), uniform_in(rng, 0.02, 0.04), uniform_in(rng, 0.02, 0.04));
        s.radius = uniform_in(rng, 0.004, 0.012);
    } else if (name == "superquadric") {
        s.kind = ShapeKind::Superquadric;
        s.axes = Vec3(uniform_in(rng, 0.03, 0.055), uniform_in(rng, 0.03, 0.055), uniform_in(rng, 0.03, 0.055));
        s.e1 = uniform_in(rng, 0.4, 1.6);
        s.e2 = uniform_in(rng, 0.4, 1.6);
    } else if (name == "icosphere") {
        s.kind = ShapeKind::TriangleMesh;
        s.mesh_source = "icosphere";
        s.subdivisions = 3;
        s.radius = uniform_in(rng, 0.035, 0.06);
    } else {
        s.kind = ShapeKind::TriangleMesh;
        s.mesh_source = "torus";
        s.major_radius = uniform_in(rng, 0.03, 0.04);
        s.minor_radius = uniform_in(rng, 0.012, 0.018);
    }
    s.rotation_deg = Vec3(uniform_in(rng, 0.0, 360.0), uniform_in(rng, 0.0, 360.0), uniform_in(rng, 0.0, 360.0));
    return s;
}

/// Masked mean s0 of a cheap preview render; 0 when the object is not visible.
double preview_brightness(const Scene &scene, const SamplingRanges &ranges) {
    RenderConfig cfg;
    cfg.width = cfg.height = ranges.preview_resolution;
    cfg.spp = ranges.preview_spp;
    cfg.seed = scene.seed;
    cfg.threads = 1;
    Scene small = scene;
    small.camera.width = small.camera.height = ranges.preview_resolution;
    const StokesRender r = render_stokes(small, cfg);
    const Mask mask = gt_maps(small).mask;
    double sum = 0.0;
    size_t n = 0;
    for (size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < 3; ++c) sum += r.mean.at(p, c).s0();
        n += 3;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

SampledScene sample_scene(uint64_t master_seed, int index, const SamplingRanges &ranges, int resolution) {
    if (index < 0) throw InputError("sample_scene: index must be non-negative");
    ranges.validate();
    for (int attempt = 0; attempt < ranges.max_rejections; ++attempt) {
        Pcg32 rng(hash_values({master_seed, static_cast<uint64_t>(index), static_cast<uint64_t>(attempt)}));
        Scene s;
        s.camera.width = s.camera.height = resolution;
        const size_t pick = std::min(ranges.shapes.size() - 1,
                                     static_cast<size_t>(rng.uniform() * static_cast<double>(ranges.shapes.size())));
        s.shape_spec = sample_shape(rng, ranges.shapes[pick]);

        Rgb mean{};
        for (int c = 0; c < 3; ++c) {
            mean[c] = uniform_in(rng, ranges.env_mean_min, ranges.env_mean_max);
            s.env.coeffs[c][0] = mean[c] * std::sqrt(4.0 * kPi);
            for (int k = 1; k < kShCount; ++k)
                s.env.coeffs[c][k] = uniform_in(rng, -ranges.higher_order, ranges.higher_order) * mean[c];
        }
        s.has_flash = true;
        s.flash.center = s.camera.position + 0.02 * s.camera.right();
        s.flash.radius = 0.01;
        s.flash.intensity =
            uniform_in(rng, ranges.flash_ratio_min, ranges.flash_ratio_max) * (mean[0] + mean[1] + mean[2]) / 3.0;

        for (int c = 0; c < 3; ++c) s.medium.sigma_t[c] = log_uniform_in(rng, ranges.sigma_t_min, ranges.sigma_t_max);
        for (int c = 0; c < 3; ++c) s.medium.albedo[c] = uniform_in(rng, ranges.albedo_min, ranges.albedo_max);
        s.medium.g = uniform_in(rng, ranges.g_min, ranges.g_max);
        s.seed = hash_values({master_seed, static_cast<uint64_t>(index), 0x72656e646572ULL});
        s.finalize();

        if (preview_brightness(s, ranges) >= ranges.min_mean_s0) return {std::move(s), attempt};
    }
    throw RefusalError("sample_scene: " + std::to_string(ranges.max_rejections) +
                       " consecutive rejections for index " + std::to_string(index) +
                       " (preview masked mean s0 below " + std::to_string(ranges.min_mean_s0) + ")");
}

// --- Generation -------------------------------------------------------------------

namespace {

std::vector<std::string> record_files() {
    std::vector<std::string> f;
    for (auto n : kCaptureFiles) f.emplace_back(n);
    for (auto n : kPureBsdfFiles) f.emplace_back(n);
    for (auto n : {"normal.pfm", "depth.pfm", "mask.pfm", "gt.json"}) f.emplace_back(n);
    return f;
}

std::string record_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "record_%06d", index);
    return buf;
}

json render_block(const GenerateConfig &cfg, const Scene &scene) {
    return {{"spp", cfg.spp},
            {"width", cfg.resolution},
            {"height", cfg.resolution},
            {"max_bounces", cfg.max_bounces},
            {"seed", scene.seed}};
}

json medium_json(const MediumParams &m) { return {{"sigma_t", m.sigma_t}, {"albedo", m.albedo}, {"g", m.g}}; }

/// Checksums of a record if every file matches and the record was produced with
/// the expected settings; empty otherwise.
std::optional<json> valid_record(const fs::path &dir, const json &expected_gt) {
    try {
        if (!fs::exists(dir / "checksums.json")) return std::nullopt;
        const auto sums = json::parse(read_bytes((dir / "checksums.json").string()));
        for (const auto &name : record_files()) {
            if (!sums.contains(name)) return std::nullopt;
            if (sha256_file((dir / name).string()) != sums.at(name).get<std::string>()) return std::nullopt;
        }
        const auto gt = json::parse(read_bytes((dir / "gt.json").string()));
        if (gt != expected_gt) return std::nullopt;
        return std::optional<json>(sums);
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

}  // namespace

GenerateResult generate(const std::string &out_dir, const SamplingRanges &ranges, const GenerateConfig &config) {
    ranges.validate();
    if (config.n < 0) throw InputError("generate: n must be non-negative");
    if (config.spp < 1 || config.resolution < 1 || config.max_bounces < 1)
        throw InputError("generate: invalid render settings");
    const fs::path root(out_dir);
    fs::create_directories(root);
    fs::remove(root / "manifest.json");

    GenerateResult result;
    json records = json::array();
    for (int i = 0; i < config.n; ++i) {
        const SampledScene sampled = sample_scene(config.master_seed, i, ranges, config.resolution);
        const Scene &scene = sampled.scene;
        const fs::path dir = root / record_name(i);
        const Mask mask = gt_maps(scene).mask;

        json gt = {{"schema_version", kRecordSchemaVersion},
                   {"generator_version", kGeneratorVersion},
                   {"index", i},
                   {"master_seed", config.master_seed},
                   {"scene", scene_to_json(scene)},
                   {"medium", medium_json(scene.medium)},
                   {"render", render_block(config, scene)},
                   {"sampling_attempt", sampled.attempt},
                   {"masked_pixels", mask.count()}};

        std::optional<json> sums = valid_record(dir, gt);
        if (sums) {
            result.skipped.push_back(i);
        } else {
            fs::create_directories(dir);
            fs::remove(dir / "checksums.json");
            const auto start = std::chrono::steady_clock::now();
            RenderConfig rc;
            rc.spp = config.spp;
            rc.seed = scene.seed;
            rc.max_bounces = config.max_bounces;
            rc.threads = config.threads;
            rc.with_pure_bsdf = true;
            const RenderOutputs out = render(scene, rc);
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            json s = json::object();
            const auto put = [&](const std::string &name, const ImageD &img) {
                write_pfm((dir / name).string(), img);
                s[name] = sha256_file((dir / name).string());
            };
            for (int a = 0; a < 4; ++a) put(kCaptureFiles[a], out.captures[a]);
            for (int a = 0; a < 4; ++a) put(kPureBsdfFiles[a], (*out.pure_bsdf_captures)[a]);
            put("normal.pfm", out.gt.normal);
            put("depth.pfm", out.gt.depth);
            put("mask.pfm", mask_image(out.gt.mask));
            const std::string gt_text = gt.dump(2) + "\n";
            write_file_atomic((dir / "gt.json").string(), gt_text);
            s["gt.json"] = sha256_hex(std::vector<unsigned char>(gt_text.begin(), gt_text.end()));
            const json timing = {{"render_seconds", seconds},
                                 {"paths", out.stats.paths},
                                 {"leaked_paths", out.stats.leaked_paths},
                                 {"truncated_paths", out.stats.truncated_paths}};
            write_file_atomic((dir / "timing.json").string(), timing.dump(2) + "\n");
            write_file_atomic((dir / "checksums.json").string(), s.dump(2) + "\n");
            sums = s;
            result.rendered.push_back(i);
        }
        records.push_back({{"index", i}, {"path", record_name(i)}, {"files", *sums}});
        if (config.on_record) config.on_record(i, !result.rendered.empty() && result.rendered.back() == i);
    }

    result.manifest = {{"generator_version", kGeneratorVersion},
                       {"schema_version", kRecordSchemaVersion},
                       {"master_seed", config.master_seed},
                       {"ranges", ranges_to_json(ranges)},
                       {"render",
                        {{"spp", config.spp},
                         {"width", config.resolution},
                         {"height", config.resolution},
                         {"max_bounces", config.max_bounces}}},
                       {"records", records}};
    write_file_atomic((root / "manifest.json").string(), result.manifest.dump(2) + "\n");
    return result;
}

// --- Loading ----------------------------------------------------------------------

SceneRecord load_record(const std::string &path) {
    const fs::path dir(path);
    if (!fs::is_directory(dir)) throw NotFoundError("record directory not found: " + path);
    if (!fs::exists(dir / "checksums.json")) throw NotFoundError("checksums.json missing in " + path);
    json sums;
    try {
        sums = json::parse(read_bytes((dir / "checksums.json").string()));
    } catch (const json::parse_error &) {
        throw IntegrityError("checksums.json", "not valid JSON");
    }
    for (const auto &name : record_files()) {
        const fs::path f = dir / name;
        if (!fs::exists(f)) throw NotFoundError(name + " missing in " + path);
        if (!sums.contains(name) || !sums.at(name).is_string()) throw IntegrityError(name, "no recorded checksum");
        if (sha256_file(f.string()) != sums.at(name).get<std::string>())
            throw IntegrityError(name, "checksum mismatch");
    }

    SceneRecord rec;
    rec.path = path;
    for (int a = 0; a < 4; ++a) {
        rec.captures[a] = to_double(read_pfm((dir / kCaptureFiles[a]).string()));
        rec.pure_bsdf[a] = to_double(read_pfm((dir / kPureBsdfFiles[a]).string()));
    }
    rec.normal = to_double(read_pfm((dir / "normal.pfm").string()));
    rec.depth = to_double(read_pfm((dir / "depth.pfm").string()));
    const ImageD mask = to_double(read_pfm((dir / "mask.pfm").string()));
    const int w = rec.captures.width(), h = rec.captures.height();
    const auto same = [&](const ImageD &im) { return im.width() == w && im.height() == h; };
    bool ok = rec.captures.consistent() && rec.pure_bsdf.consistent() && same(rec.pure_bsdf[0]) && same(rec.normal) &&
              same(rec.depth) && same(mask);
    if (!ok) throw InputError(path + ": record images differ in size");
    rec.mask = Mask(w, h);
    for (size_t p = 0; p < rec.mask.size(); ++p) rec.mask.set(p, mask.at(p, 0) > 0.5);

    try {
        rec.gt = json::parse(read_bytes((dir / "gt.json").string()));
        const detail::Reader med(rec.gt.at("medium"), "/medium");
        rec.medium.sigma_t = med.child("sigma_t").rgb();
        rec.medium.albedo = med.child("albedo").rgb();
        rec.medium.g = med.child("g").number();
        if (rec.gt.at("schema_version").get<int>() != kRecordSchemaVersion)
            rec.warnings.push_back("gt.json: unexpected schema_version");
    } catch (const json::exception &e) {
        throw InputError(path + ": gt.json malformed: " + e.what());
    }

    // Capture consistency: non-negative, finite, and I0 + I90 == I45 + I135 (both are s0).
    size_t negative = 0, nonfinite = 0, inconsistent = 0;
    for (const CaptureSet *set : {&rec.captures, &rec.pure_bsdf}) {
        for (size_t p = 0; p < static_cast<size_t>(w) * h; ++p) {
            for (int c = 0; c < 3; ++c) {
                double sum = 0.0;
                for (int a = 0; a < 4; ++a) {
                    const double v = (*set)[a].at(p, c);
                    nonfinite += !std::isfinite(v);
                    negative += v < -1e-6;  // rounding slack for realizable pixels
                    sum += v;
                }
                const double s0a = (*set)[0].at(p, c) + (*set)[2].at(p, c);
                const double s0b = (*set)[1].at(p, c) + (*set)[3].at(p, c);
                if (0.5 * sum < -1e-6 || std::abs(s0a - s0b) > 1e-5 * std::max(1.0, std::abs(s0a)))
                    ++inconsistent;
            }
        }
    }
    if (nonfinite) rec.warnings.push_back(std::to_string(nonfinite) + " non-finite capture values");
    if (negative) rec.warnings.push_back(std::to_string(negative) + " negative capture values");
    if (inconsistent) rec.warnings.push_back(std::to_string(inconsistent) + " pixels with inconsistent captures");
    return rec;
}

}  // namespace polsss
