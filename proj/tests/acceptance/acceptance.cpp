// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Optional arguments select criteria by number.
//
// Runtime budgets are stated for an 8-core machine and scaled by 8 / cores.

#include "polsss/dataset.h"
#include "polsss/errors.h"
#include "polsss/fresnel.h"
#include "polsss/inverse.h"
#include "polsss/medium.h"
#include "polsss/pfm.h"
#include "polsss/renderer.h"
#include "polsss/rng.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace polsss;
namespace fs = std::filesystem;

namespace {

// --- Pinned tolerances ------------------------------------------------------------

constexpr double kCaptureRelTol = 1e-12;
constexpr double kBrewsterDopTol = 1e-9;
constexpr double kNormalReflectance = 0.04059;
constexpr double kNormalReflectanceTol = 1e-6;
constexpr double kHgNormTol = 1e-4;
constexpr double kHgMeanSe = 3.0;
constexpr int kHgSamples = 1000000;
constexpr double kFurnaceLo = 0.98, kFurnaceHi = 1.02;
constexpr double kFurnaceDopMax = 0.01;
constexpr double kAopFlipTolDeg = 5.0;
constexpr double kDecompositionSigma = 3.0;
constexpr double kAlbedoTol = 0.05;
constexpr double kGTol = 0.1;
constexpr double kSigmaRelTol = 0.25;
constexpr int kMaxEvaluations = 2000;

// --- Fixture settings -------------------------------------------------------------

// Extinction of the furnace medium. Lower values let a visible share of paths
// cross the sphere unscattered, which the subsurface estimator excludes.
constexpr double kFurnaceSigma = 200.0;
constexpr int kFurnaceSpp = 1024;
constexpr int kTrendSpp = 64;
constexpr uint64_t kTrendSeed = 11;
constexpr int kAopSpp = 256;
constexpr int kDecompositionSpp = 512;
constexpr int kObservationSpp = 256;
constexpr uint64_t kObservationSeed = 1001;
constexpr uint64_t kOptimizerSeed = 5;

int cores() { return std::max(1u, std::thread::hardware_concurrency()); }

double scaled_budget(double seconds_on_8_cores) { return seconds_on_8_cores * std::max(1.0, 8.0 / cores()); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char *name;
    double budget_8core_s;
    std::function<Outcome()> run;
};

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Mask masked_and(const Mask &a, const std::function<bool(size_t)> &keep) {
    Mask m(a.width(), a.height());
    for (size_t p = 0; p < a.size(); ++p) m.set(p, a[p] && keep(p));
    return m;
}

double masked_channel_mean(const ImageD &img, const Mask &mask) {
    double s = 0.0;
    size_t n = 0;
    for (size_t p = 0; p < mask.size(); ++p)
        if (mask[p])
            for (int c = 0; c < 3; ++c, ++n) s += img.at(p, c);
    return s / static_cast<double>(n);
}

RenderConfig config(int spp, uint64_t seed) {
    RenderConfig c;
    c.spp = spp;
    c.seed = seed;
    return c;
}

// --- 1. Capture algebra -----------------------------------------------------------

Outcome capture_algebra() {
    Pcg32 rng(2026);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double s0 = 0.01 + 100.0 * rng.uniform();
        const double r = s0 * rng.uniform(), phi = 2.0 * kPi * rng.uniform();
        const StokesVector s(s0, r * std::cos(phi), r * std::sin(phi));
        double in[4];
        for (int a = 0; a < 4; ++a) in[a] = measure_polarizer(s, deg_to_rad(45.0 * a));
        const StokesVector back = invert_capture(in[0], in[1], in[2], in[3]);
        worst = std::max(worst, (back.v - s.v).norm() / s.v.norm());
    }
    return {worst <= kCaptureRelTol, "max relative error " + fmt("%.2e", worst)};
}

// --- 2. Brewster and normal incidence ---------------------------------------------

Outcome brewster() {
    const double eta = kDefaultEta;
    const double theta = std::atan(eta);
    // Independent oracle: amplitude coefficients from Snell's law.
    const double ci = std::cos(theta), st = std::sin(theta) / eta, ct = std::sqrt(1.0 - st * st);
    const double rs = (ci - eta * ct) / (ci + eta * ct), rp = (eta * ci - ct) / (eta * ci + ct);
    const double oracle_dop = std::abs(rs * rs - rp * rp) / (rs * rs + rp * rp);
    const StokesVector out = reflect_mueller(ci, eta) * StokesVector::unpolarized(1.0);
    const double dop = dop_aop(out).dop;
    const double r0 = fresnel_reflectance(1.0, eta);
    const double r0_oracle = std::pow((eta - 1.0) / (eta + 1.0), 2.0);
    const bool ok = std::abs(dop - 1.0) <= kBrewsterDopTol && std::abs(oracle_dop - 1.0) <= kBrewsterDopTol &&
                    std::abs(r0 - kNormalReflectance) <= kNormalReflectanceTol &&
                    std::abs(r0 - r0_oracle) <= 1e-15;
    return {ok, "theta_B " + fmt("%.4f", rad_to_deg(theta)) + " deg, DoP-1 " + fmt("%.1e", dop - 1.0) + ", R(0) " +
                    fmt("%.7f", r0)};
}

// --- 3. Henyey-Greenstein ---------------------------------------------------------

Outcome henyey_greenstein() {
    bool ok = true;
    std::ostringstream d;
    for (double g : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        // Simpson over mu in [-1, 1], times 2 pi.
        const int n = 20000;
        const double h = 2.0 / n;
        double s = hg_eval(-1.0, g) + hg_eval(1.0, g);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * hg_eval(-1.0 + i * h, g);
        const double norm = 2.0 * kPi * s * h / 3.0;

        Pcg32 rng(hash_values({99, static_cast<uint64_t>(std::llround((g + 1.0) * 10.0))}));
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < kHgSamples; ++i) {
            const double mu = hg_sample_cos(g, rng.uniform());
            sum += mu;
            sum2 += mu * mu;
        }
        const double mean = sum / kHgSamples;
        const double se = std::sqrt(std::max(0.0, sum2 / kHgSamples - mean * mean) / kHgSamples);
        const double z = std::abs(mean - g) / se;
        ok = ok && std::abs(norm - 1.0) <= kHgNormTol && z <= kHgMeanSe;
        d << (g == -0.9 ? "" : ", ") << "g=" << g << ": norm-1 " << fmt("%.1e", norm - 1.0) << " z " << fmt("%.2f", z);
    }
    return {ok, d.str()};
}

// --- 4. White furnace -------------------------------------------------------------

Outcome white_furnace() {
    Scene s = canonical_scene(128);
    s.env = SHEnvironment::constant(1.0);
    s.has_flash = false;
    s.medium.sigma_t = {kFurnaceSigma, kFurnaceSigma, kFurnaceSigma};
    s.medium.albedo = {1.0, 1.0, 1.0};
    s.medium.g = 0.5;
    s.finalize();
    RenderConfig c = config(kFurnaceSpp, 4);
    c.furnace_test = true;
    c.max_bounces = 1 << 20;
    const RenderOutputs out = render(s, c);
    const double s0 = masked_channel_mean(out.stokes.s[0], out.gt.mask);
    const double dop = polarimetric_summary(out.polarimetric, out.gt.mask).mean_dop;
    return {s0 >= kFurnaceLo && s0 <= kFurnaceHi && dop <= kFurnaceDopMax,
            "masked mean s0 " + fmt("%.4f", s0) + ", DoP " + fmt("%.2e", dop) + ", sigma_t " +
                fmt("%.0f", kFurnaceSigma) + ", truncated paths " + std::to_string(out.stats.truncated_paths)};
}

// --- 5. DoP-albedo trend ----------------------------------------------------------

Outcome dop_trend() {
    std::vector<double> dops;
    std::ostringstream d;
    for (double a : {0.2, 0.4, 0.6, 0.8, 0.95}) {
        Scene s = canonical_scene(128);
        s.medium.albedo = {a, a, a};
        s.finalize();
        const RenderOutputs out = render(s, config(kTrendSpp, kTrendSeed));
        dops.push_back(polarimetric_summary(out.polarimetric, out.gt.mask).mean_dop);
        d << (dops.size() > 1 ? ", " : "") << "a=" << a << ": " << fmt("%.4f", dops.back());
    }
    bool ok = true;
    for (size_t i = 1; i < dops.size(); ++i) ok = ok && dops[i] < dops[i - 1];
    return {ok, d.str()};
}

// --- 6. AoP flip ------------------------------------------------------------------

// Lower part of the sphere, 30-40 degrees from the view direction. Its mirror
// direction sees the dim lower environment, so the specular component does not
// mask the subsurface one at high albedo.
Mask aop_patch(const SceneGT &gt) {
    return masked_and(gt.mask, [&](size_t p) {
        const double nx = gt.normal.at(p, 0), ny = gt.normal.at(p, 1), nz = gt.normal.at(p, 2);
        const double angle = rad_to_deg(std::acos(std::clamp(-nz, -1.0, 1.0)));
        return ny > 0.0 && angle >= 30.0 && angle <= 40.0 && std::abs(nx) < 0.15;
    });
}

Outcome aop_flip() {
    double modes[2];
    size_t pixels = 0;
    const double albedos[2] = {0.05, 0.95};
    for (int i = 0; i < 2; ++i) {
        Scene s = canonical_scene(128);
        s.medium.albedo = {albedos[i], albedos[i], albedos[i]};
        s.finalize();
        const RenderOutputs out = render(s, config(kAopSpp, 21));
        const Mask patch = aop_patch(out.gt);
        pixels = patch.count();
        modes[i] = polarimetric_summary(out.polarimetric, patch).aop_mode;
    }
    const double dist = rad_to_deg(aop_distance(modes[0], modes[1]));
    return {std::abs(dist - 90.0) <= kAopFlipTolDeg,
            "AoP mode " + fmt("%.1f", rad_to_deg(modes[0])) + " deg (a=0.05) vs " + fmt("%.1f", rad_to_deg(modes[1])) +
                " deg (a=0.95), distance " + fmt("%.1f", dist) + " deg over " + std::to_string(pixels) + " px"};
}

// --- 7. Decomposition identity ----------------------------------------------------

Outcome decomposition() {
    const Scene s = canonical_scene(128);
    const Mask mask = gt_maps(s).mask;
    RenderConfig c = config(kDecompositionSpp, 31);
    c.mode = RenderMode::PureBsdf;
    const StokesRender pure = render_stokes(s, c);

    InverseProblem problem;
    problem.scene = s;
    problem.mask = mask;
    problem.observations = capture_images(pure.mean);  // only the shape matters here

    // Common random numbers: the branches partition the full path set exactly.
    const Reconstruction crn = reconstruction_residual(capture_images(pure.mean), capture_variance(pure.variance),
                                                       s.medium, problem, kDecompositionSpp, 31);
    // Independent streams for the pure-BSDF branch.
    c.seed = 32;
    const StokesRender pure_b = render_stokes(s, c);
    const Reconstruction indep = reconstruction_residual(capture_images(pure_b.mean), capture_variance(pure_b.variance),
                                                         s.medium, problem, kDecompositionSpp, 31);
    const bool ok = crn.max_discrepancy_sigma <= kDecompositionSigma && indep.fraction_within_3sigma >= 0.99;
    return {ok, "shared streams: max " + fmt("%.2e", crn.max_discrepancy_sigma) +
                    " sigma; independent streams: " + fmt("%.4f", indep.fraction_within_3sigma) +
                    " of pixel-channel-angles within 3 sigma (max " + fmt("%.1f", indep.max_discrepancy_sigma) + ")"};
}

// --- 8. Inverse recovery ----------------------------------------------------------

Outcome inverse_recovery() {
    const Scene s = canonical_scene(128);
    const RenderOutputs obs = render(s, config(kObservationSpp, kObservationSeed));
    InverseProblem problem;
    problem.observations = obs.captures;
    problem.scene = s;
    problem.mask = obs.gt.mask;
    OptimizerConfig oc;
    oc.max_evals = kMaxEvaluations;
    oc.restarts = 5;
    oc.seed = kOptimizerSeed;
    const EstimationResult r = estimate_sss(problem, oc);
    const MediumParams &p = r.params, &t = s.medium;
    bool ok = r.evaluations <= kMaxEvaluations && std::abs(p.g - t.g) <= kGTol;
    for (int c = 0; c < 3; ++c) {
        ok = ok && std::abs(p.albedo[c] - t.albedo[c]) <= kAlbedoTol;
        ok = ok && std::abs(p.sigma_t[c] / t.sigma_t[c] - 1.0) <= kSigmaRelTol;
    }
    std::ostringstream d;
    d << "sigma_t (" << fmt("%.1f", p.sigma_t[0]) << ", " << fmt("%.1f", p.sigma_t[1]) << ", "
      << fmt("%.1f", p.sigma_t[2]) << ") albedo (" << fmt("%.3f", p.albedo[0]) << ", " << fmt("%.3f", p.albedo[1])
      << ", " << fmt("%.3f", p.albedo[2]) << ") g " << fmt("%.3f", p.g) << ", loss " << fmt("%.3e", r.loss)
      << ", evaluations " << r.evaluations << ", best restart " << r.best_restart;
    return {ok, d.str()};
}

// --- 9. Determinism ---------------------------------------------------------------

Outcome determinism(const fs::path &work) {
    const Scene s = canonical_scene(64);
    std::vector<std::string> sums[2];
    const int workers[2] = {1, std::max(4, cores())};
    for (int i = 0; i < 2; ++i) {
        RenderConfig c = config(16, 77);
        c.threads = workers[i];
        c.with_pure_bsdf = true;
        const RenderOutputs out = render(s, c);
        const fs::path dir = work / ("det_" + std::to_string(i));
        fs::create_directories(dir);
        for (int a = 0; a < 4; ++a) {
            write_pfm((dir / kCaptureFiles[a]).string(), out.captures[a]);
            write_pfm((dir / kPureBsdfFiles[a]).string(), (*out.pure_bsdf_captures)[a]);
            sums[i].push_back(sha256_file((dir / kCaptureFiles[a]).string()));
            sums[i].push_back(sha256_file((dir / kPureBsdfFiles[a]).string()));
        }
    }
    GenerateConfig g;
    g.n = 2;
    g.master_seed = 4242;
    g.spp = 8;
    g.resolution = 48;
    nlohmann::json manifests[2];
    for (int i = 0; i < 2; ++i) {
        g.threads = workers[i];
        manifests[i] = generate((work / ("ds_" + std::to_string(i))).string(), SamplingRanges{}, g).manifest;
    }
    const bool renders = sums[0] == sums[1];
    const bool datasets = manifests[0].at("records") == manifests[1].at("records");
    return {renders && datasets, std::string("render files ") + (renders ? "identical" : "DIFFER") + " for " +
                                     std::to_string(workers[0]) + " vs " + std::to_string(workers[1]) +
                                     " workers; dataset manifest checksums " + (datasets ? "identical" : "DIFFER")};
}

// --- 10. Dataset generation -------------------------------------------------------

Outcome dataset_generation(const fs::path &work) {
    GenerateConfig g;
    g.n = 10;
    g.master_seed = 2026;
    g.spp = 64;
    g.resolution = 128;
    const fs::path dir = work / "dataset";
    const GenerateResult r = generate(dir.string(), SamplingRanges{}, g);
    size_t warnings = 0, valid = 0;
    for (int i = 0; i < g.n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "record_%06d", i);
        try {
            warnings += load_record((dir / name).string()).warnings.size();
            ++valid;
        } catch (const std::exception &e) {
            std::fprintf(stderr, "record %d: %s\n", i, e.what());
        }
    }
    return {valid == 10 && warnings == 0 && r.rendered.size() == 10,
            std::to_string(valid) + "/10 records valid, " + std::to_string(warnings) + " warnings"};
}

}  // namespace

int main(int argc, char **argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    const fs::path work = fs::temp_directory_path() / "polsss_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    const std::vector<Criterion> criteria = {
        {1, "capture_algebra", 1.0, capture_algebra},
        {2, "brewster_and_normal_incidence", 1.0, brewster},
        {3, "henyey_greenstein", 30.0, henyey_greenstein},
        {4, "white_furnace", 600.0, white_furnace},
        {5, "dop_albedo_trend", 900.0, dop_trend},
        {6, "aop_flip", 600.0, aop_flip},
        {7, "decomposition_identity", 600.0, decomposition},
        {8, "inverse_recovery", 3600.0, inverse_recovery},
        {9, "determinism", 300.0, [&] { return determinism(work); }},
        {10, "dataset_generation", 1800.0, [&] { return dataset_generation(work); }},
    };

    std::printf("cores %d, budget scale %.2f\n", cores(), scaled_budget(1.0));
    std::fflush(stdout);
    int failures = 0;
    for (const Criterion &c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double budget = scaled_budget(c.budget_8core_s);
        const bool in_time = secs <= budget;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s %2d %-30s %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, budget, in_time ? "" : ", EXCEEDED");
        std::fflush(stdout);
    }
    fs::remove_all(work);
    return failures == 0 ? 0 : 1;
}
