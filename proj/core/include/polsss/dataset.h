// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic dataset generation.
//
// Layout of an output directory:
//
//   manifest.json               written last, via a temporary file and rename
//   record_000000/
//     i000.pfm i045.pfm i090.pfm i135.pfm    polarizer captures
//     b000.pfm b045.pfm b090.pfm b135.pfm    pure-BSDF captures
//     normal.pfm depth.pfm mask.pfm          ground truth (depth and mask replicated to RGB)
//     gt.json                                scene, medium parameters, render settings
//     timing.json                            wall-clock timing (not checksummed)
//     checksums.json                         SHA-256 of every file above except timing.json
//
// gt.json (schema_version 1):
//   { "schema_version": 1, "generator_version": "...", "index": n, "master_seed": s,
//     "scene": <scene document>, "medium": {"sigma_t": [..], "albedo": [..], "g": x},
//     "render": {"spp": n, "width": w, "height": h, "max_bounces": n, "seed": s},
//     "sampling_attempt": k, "masked_pixels": n }
// Lengths are metres, sigma_t is per metre, angles are degrees.

#pragma once

#include "polsss/renderer.h"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace polsss {

inline constexpr const char *kGeneratorVersion = "polsss-dataset-1";
inline constexpr int kRecordSchemaVersion = 1;

struct SamplingRanges {
    double sigma_t_min = 1.0, sigma_t_max = 300.0;  // log-uniform, per channel
    double albedo_min = 0.05, albedo_max = 0.99;    // uniform, per channel
    double g_min = -0.8, g_max = 0.8;
    /// Shape library entries: sphere, rounded_box, superquadric, icosphere, torus.
    std::vector<std::string> shapes{"sphere", "rounded_box", "superquadric", "icosphere", "torus"};
    /// Constant SH term as a multiple of sqrt(4 pi), i.e. the mean radiance.
    double env_mean_min = 0.5, env_mean_max = 2.0;
    /// Bands 1 and 2: uniform in +-higher_order times the mean radiance.
    double higher_order = 0.3;
    /// Flash radiance as a multiple of the environment mean radiance.
    double flash_ratio_min = 3.0, flash_ratio_max = 10.0;
    /// Rejection: scenes whose preview has masked mean s0 below this are resampled.
    double min_mean_s0 = 0.01;
    int max_rejections = 100;
    int preview_resolution = 16;
    int preview_spp = 4;

    /// Throws InputError when a range is empty or outside its domain.
    void validate() const;
    bool operator==(const SamplingRanges &) const = default;
};

/// Throws SchemaError with a JSON pointer; missing fields keep their defaults.
SamplingRanges ranges_from_json(const nlohmann::json &j);
nlohmann::json ranges_to_json(const SamplingRanges &r);
SamplingRanges load_ranges(const std::string &path);

struct SampledScene {
    Scene scene;
    int attempt = 0;  // accepted rejection-sampling attempt
};

/// Deterministic in (master_seed, index, ranges). Throws RefusalError after
/// `max_rejections` consecutive rejections.
SampledScene sample_scene(uint64_t master_seed, int index, const SamplingRanges &ranges, int resolution = 128);

struct GenerateConfig {
    int n = 10;
    uint64_t master_seed = 1;
    int spp = 64;
    int resolution = 128;
    int max_bounces = 64;
    int threads = 0;
    std::function<void(int index, bool rendered)> on_record;
};

struct GenerateResult {
    nlohmann::json manifest;
    std::vector<int> rendered;  // indices rendered in this run
    std::vector<int> skipped;   // indices reused from a previous run
};

/// Writes `n` records under `out_dir` and the manifest last. Existing records
/// whose checksums and settings match are reused.
GenerateResult generate(const std::string &out_dir, const SamplingRanges &ranges, const GenerateConfig &config);

struct SceneRecord {
    std::string path;
    CaptureSet captures;
    CaptureSet pure_bsdf;
    ImageD normal;
    ImageD depth;
    Mask mask;
    nlohmann::json gt;
    MediumParams medium;
    std::vector<std::string> warnings;
};

/// Loads and validates a record. Throws NotFoundError for a missing file,
/// IntegrityError (naming the file) on a checksum mismatch, InputError on
/// malformed content.
SceneRecord load_record(const std::string &path);

/// Hex SHA-256 of a byte buffer / file.
std::string sha256_hex(const std::vector<unsigned char> &bytes);
std::string sha256_file(const std::string &path);

/// Capture file names in angle order.
inline constexpr std::array<const char *, 4> kCaptureFiles = {"i000.pfm", "i045.pfm", "i090.pfm", "i135.pfm"};
inline constexpr std::array<const char *, 4> kPureBsdfFiles = {"b000.pfm", "b045.pfm", "b090.pfm", "b135.pfm"};

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::string &path, const std::string &content);

}  // namespace polsss
