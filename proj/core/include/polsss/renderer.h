// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Polarized volumetric path tracer.
//
// Paths are traced from the camera. At the smooth boundary a path either reflects
// (Fresnel reflection Mueller matrix) or refracts into the medium, chosen with
// probability equal to the unpolarized reflectance. A refracted path is
// depolarized immediately and continues as a scalar random walk (free-flight
// sampling, albedo weighting, Henyey-Greenstein scattering, scalar internal
// reflection); when it leaves, the transmission Mueller matrix of the crossing is
// applied. Paths that would cross the medium without a single scattering event are
// absorbed: the subsurface path family always contains at least one volume event.
//
// Each (pixel, sample, channel) owns a counter-based random stream, so results are
// independent of the worker count and of which pixels are rendered.

#pragma once

#include "polsss/scene.h"
#include "polsss/stokes.h"

#include <cstdint>
#include <functional>
#include <optional>

namespace polsss {

enum class RenderMode {
    Full,        // all light paths
    PureBsdf,    // paths that never enter the medium (subsurface removed)
    SssOnly,     // paths that enter the medium at least once
    Unpolarized  // full transport, only s0 tracked
};

std::string to_string(RenderMode m);
RenderMode render_mode_from_string(const std::string &s);

struct RenderConfig {
    int width = 0;   // 0: use the scene camera resolution
    int height = 0;
    int spp = 64;
    int max_bounces = 64;
    uint64_t seed = 1;
    RenderMode mode = RenderMode::Full;
    /// Index-matched boundary (eta = 1) regardless of the scene interface.
    bool furnace_test = false;
    /// Also render the pure-BSDF captures into RenderOutputs.
    bool with_pure_bsdf = false;
    /// Negative SH lobes are clamped unless disabled (basis-light renders).
    bool clamp_env = true;
    /// 0: hardware concurrency (or POLSSS_THREADS).
    int threads = 0;
    /// Restricts tracing to these pixels; others stay zero.
    std::optional<Mask> pixel_mask;
    std::function<void(double)> progress;

    void validate() const;
};

struct RenderStats {
    uint64_t paths = 0;
    uint64_t medium_paths = 0;
    uint64_t leaked_paths = 0;  // rays found on the wrong side of the boundary
    uint64_t truncated_paths = 0;  // stopped by max_bounces
    double seconds = 0.0;
};

struct StokesRender {
    StokesImage mean;
    StokesImage variance;  // variance of the per-pixel mean estimator
    RenderStats stats;
};

struct RenderOutputs {
    StokesImage stokes;
    StokesImage variance;
    CaptureSet captures;
    std::optional<CaptureSet> pure_bsdf_captures;
    SceneGT gt;
    PolarimetricMaps polarimetric;
    RenderStats stats;
};

/// Traces the Stokes image only.
StokesRender render_stokes(const Scene &scene, const RenderConfig &config);

/// Full render: Stokes image, polarizer captures, ground truth and polarimetric maps.
RenderOutputs render(const Scene &scene, const RenderConfig &config);

struct PolarimetricSummary {
    double mean_dop = 0.0;
    std::vector<double> dop_histogram;  // 20 bins over [0, 1]
    std::vector<double> aop_histogram;  // 180 bins over [0, pi), weighted by polarized intensity
    double aop_mode = 0.0;              // radians
    size_t pixels = 0;
};

/// Statistics over masked pixels (all channels). Throws RefusalError for an empty mask.
PolarimetricSummary polarimetric_summary(const PolarimetricMaps &maps, const Mask &mask);

/// Smallest distance between two angles on the circle of period pi.
double aop_distance(double a, double b);

/// Default worker count: POLSSS_THREADS or the hardware concurrency.
int default_thread_count();

}  // namespace polsss
