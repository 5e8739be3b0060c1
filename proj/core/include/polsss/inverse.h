// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Analysis-by-synthesis estimation of subsurface parameters and illumination.
//
// The objective renders the known scene with candidate medium parameters under a
// fixed seed (common random numbers) and compares the four polarizer captures
// against the observations over the object mask. Rendered and observed
// captures are both rounded to float before comparison, so an observation loaded
// from PFM and one held in memory give the same loss.

#pragma once

#include "polsss/renderer.h"

#include <array>
#include <string>
#include <vector>

namespace polsss {

enum class LossKind { L1, L2 };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string &s);

struct InverseProblem {
    CaptureSet observations;
    Scene scene;  // known shape and illumination; the medium is ignored
    Mask mask;    // pixels entering the loss; empty means the object mask
    Rgb channel_weights{1.0, 1.0, 1.0};
    LossKind loss = LossKind::L2;
    int max_bounces = 64;
    int threads = 0;

    /// Throws InputError on dimension mismatch or an empty mask.
    void validate() const;
    /// The effective loss mask.
    Mask effective_mask() const;
};

struct ParameterBounds {
    double sigma_t_min = 1.0, sigma_t_max = 300.0;
    double albedo_min = 0.01, albedo_max = 0.999;
    double g_min = -0.9, g_max = 0.9;

    void validate() const;
    MediumParams clamp(const MediumParams &p) const;
    bool contains(const MediumParams &p) const;
};

/// Search-space coordinates: log sigma_t (3), logit albedo (3), g.
using SearchPoint = std::array<double, 7>;

SearchPoint to_search_space(const MediumParams &p);
MediumParams from_search_space(const SearchPoint &x);

struct OptimizerConfig {
    std::string algorithm = "simplex";
    int max_evals = 2000;
    std::vector<int> spp_schedule{32, 128, 512};
    /// Advance to the next spp level once the simplex diameter falls below this
    /// fraction of the search box.
    double stage_trigger = 0.1;
    /// Stop a restart once the diameter falls below this fraction at the last level.
    double tolerance = 0.01;
    uint64_t seed = 1;
    ParameterBounds bounds;
    int restarts = 5;
    /// Number of points sampled on the sigma_t / albedo similarity slice.
    int similarity_slice_points = 9;

    void validate() const;
};

struct TracePoint {
    int restart = 0;
    int evaluation = 0;  // global evaluation count when recorded
    int spp = 0;
    double loss = 0.0;   // best loss so far at this spp level
};

struct SimilaritySlice {
    /// Scale s applied as sigma_t * s, with the albedo adjusted so the reduced
    /// scattering coefficient sigma_t * albedo * (1 - g) is preserved.
    std::vector<double> scale;
    std::vector<double> loss;
};

struct EstimationResult {
    MediumParams params;
    double loss = 0.0;  // at the final spp level
    std::vector<TracePoint> trace;
    std::vector<double> restart_losses;
    std::vector<MediumParams> restart_params;
    int best_restart = 0;
    int evaluations = 0;
    double reconstruction_residual = 0.0;  // mean L1 of the captures at the estimate
    bool converged = false;
    SimilaritySlice similarity;
};

/// Image-space loss: weighted mean over masked pixels, four angles and three
/// channels of |rendered - observed| (L1) or its square (L2).
double objective(const InverseProblem &problem, const MediumParams &params, int spp, uint64_t seed);

/// Loss between two capture sets under the problem's mask, weights and loss kind.
double capture_loss(const InverseProblem &problem, const CaptureSet &rendered);

EstimationResult estimate_sss(const InverseProblem &problem, const OptimizerConfig &config);

struct Reconstruction {
    CaptureSet captures;        // full render with the candidate parameters
    CaptureSet sss_only;        // subsurface-branch render
    std::array<double, 4> per_angle_l1{};
    double loss = 0.0;          // mean of per_angle_l1
    /// Decomposition check full == pure_bsdf + sss_only over masked pixels,
    /// expressed in combined standard errors.
    double max_discrepancy_sigma = 0.0;
    double fraction_within_3sigma = 0.0;
};

/// Re-renders the full captures with `params`, reports per-angle L1 against the
/// observations, and checks the decomposition identity against the supplied
/// pure-BSDF captures and their per-pixel capture variance (may be empty).
Reconstruction reconstruction_residual(const CaptureSet &pure_bsdf, const CaptureSet &pure_bsdf_variance,
                                       const MediumParams &params, const InverseProblem &problem, int spp,
                                       uint64_t seed);

/// Per-pixel variance of each polarizer capture, bounded from the component
/// variances of the Stokes estimator (covariances are not tracked).
CaptureSet capture_variance(const StokesImage &variance);

struct IlluminationEstimate {
    SHEnvironment env;
    double flash_intensity = 0.0;
    double condition_number = 0.0;
    bool rank_deficient = false;
    double loss = 0.0;  // mean squared capture residual
};

/// Fits the 27 SH coefficients and the flash intensity (shared across channels)
/// by linear least squares on per-light transport renders, with the constant SH
/// term and the flash constrained to be non-negative. `mask` empty: all pixels.
IlluminationEstimate estimate_illumination(const Scene &scene, const CaptureSet &observations, int spp,
                                           uint64_t seed, const Mask &mask = {}, int threads = 0);

}  // namespace polsss
