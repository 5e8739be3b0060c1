// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/inverse.h"

#include "polsss/errors.h"
#include "polsss/rng.h"

#include <Eigen/Dense>

#include <limits>

namespace polsss {

std::string to_string(LossKind k) { return k == LossKind::L1 ? "l1" : "l2"; }

LossKind loss_kind_from_string(const std::string &s) {
    if (s == "l1" || s == "L1") return LossKind::L1;
    if (s == "l2" || s == "L2") return LossKind::L2;
    throw InputError("unknown loss kind '" + s + "'");
}

// --- Problem ----------------------------------------------------------------------

Mask InverseProblem::effective_mask() const {
    if (mask.size() > 0) return mask;
    return gt_maps(scene).mask;
}

void InverseProblem::validate() const {
    if (!scene.shape) throw InputError("inverse problem: scene is not finalized");
    if (!observations.consistent()) throw InputError("inverse problem: observation images differ in size");
    if (observations.width() != scene.camera.width || observations.height() != scene.camera.height)
        throw InputError("inverse problem: observations do not match the camera resolution");
    if (mask.size() > 0 && (mask.width() != scene.camera.width || mask.height() != scene.camera.height))
        throw InputError("inverse problem: mask does not match the camera resolution");
    if (effective_mask().count() == 0) throw InputError("inverse problem: empty mask");
    for (double w : channel_weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("inverse problem: invalid channel weight");
    if (channel_weights[0] + channel_weights[1] + channel_weights[2] <= 0.0)
        throw InputError("inverse problem: all channel weights are zero");
}

void ParameterBounds::validate() const {
    if (!(sigma_t_min > 0.0 && sigma_t_min < sigma_t_max)) throw InputError("invalid sigma_t bounds");
    if (!(albedo_min > 0.0 && albedo_min < albedo_max && albedo_max < 1.0)) throw InputError("invalid albedo bounds");
    if (!(g_min > -1.0 && g_min < g_max && g_max < 1.0)) throw InputError("invalid g bounds");
}

MediumParams ParameterBounds::clamp(const MediumParams &p) const {
    MediumParams q = p;
    for (int c = 0; c < 3; ++c) {
        q.sigma_t[c] = std::clamp(p.sigma_t[c], sigma_t_min, sigma_t_max);
        q.albedo[c] = std::clamp(p.albedo[c], albedo_min, albedo_max);
    }
    q.g = std::clamp(p.g, g_min, g_max);
    return q;
}

bool ParameterBounds::contains(const MediumParams &p) const {
    for (int c = 0; c < 3; ++c) {
        if (p.sigma_t[c] < sigma_t_min || p.sigma_t[c] > sigma_t_max) return false;
        if (p.albedo[c] < albedo_min || p.albedo[c] > albedo_max) return false;
    }
    return p.g >= g_min && p.g <= g_max;
}

void OptimizerConfig::validate() const {
    if (algorithm != "simplex") throw InputError("unsupported optimizer '" + algorithm + "'");
    if (max_evals < 1) throw InputError("max_evals must be positive");
    if (restarts < 1) throw InputError("restarts must be positive");
    if (spp_schedule.empty()) throw InputError("spp schedule is empty");
    for (int s : spp_schedule)
        if (s < 1) throw InputError("spp schedule entries must be positive");
    if (!(stage_trigger > 0.0) || !(tolerance > 0.0)) throw InputError("simplex thresholds must be positive");
    if (similarity_slice_points < 0) throw InputError("similarity_slice_points must be non-negative");
    bounds.validate();
}

namespace {

double logit(double a) { return std::log(a / (1.0 - a)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SearchPoint to_search_space(const MediumParams &p) {
    return {std::log(p.sigma_t[0]), std::log(p.sigma_t[1]), std::log(p.sigma_t[2]),
            logit(p.albedo[0]),     logit(p.albedo[1]),     logit(p.albedo[2]),
            p.g};
}

MediumParams from_search_space(const SearchPoint &x) {
    MediumParams p;
    for (int c = 0; c < 3; ++c) {
        p.sigma_t[c] = std::exp(x[c]);
        p.albedo[c] = sigmoid(x[3 + c]);
    }
    p.g = x[6];
    return p;
}

// --- Objective --------------------------------------------------------------------

namespace {

StokesRender render_masked(const Scene &scene, const MediumParams &params, const Mask &mask, int spp,
                           uint64_t seed, RenderMode mode, int max_bounces, int threads) {
    Scene s = scene;
    s.medium = params;
    RenderConfig cfg;
    cfg.spp = spp;
    cfg.seed = seed;
    cfg.mode = mode;
    cfg.max_bounces = max_bounces;
    cfg.threads = threads;
    cfg.pixel_mask = mask;
    return render_stokes(s, cfg);
}

}  // namespace

double capture_loss(const InverseProblem &problem, const CaptureSet &rendered) {
    const Mask mask = problem.effective_mask();
    const auto &w = problem.channel_weights;
    double sum = 0.0;
    size_t pixels = 0;
    for (size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        ++pixels;
        for (int a = 0; a < 4; ++a) {
            for (int c = 0; c < 3; ++c) {
                const double d = static_cast<double>(static_cast<float>(rendered[a].at(p, c))) -
                                 static_cast<double>(static_cast<float>(problem.observations[a].at(p, c)));
                sum += w[c] * (problem.loss == LossKind::L1 ? std::abs(d) : d * d);
            }
        }
    }
    return sum / (static_cast<double>(pixels) * 4.0 * (w[0] + w[1] + w[2]));
}

double objective(const InverseProblem &problem, const MediumParams &params, int spp, uint64_t seed) {
    params.validate();
    const Mask mask = problem.effective_mask();
    const StokesRender r =
        render_masked(problem.scene, params, mask, spp, seed, RenderMode::Full, problem.max_bounces, problem.threads);
    return capture_loss(problem, capture_images(r.mean));
}

// --- Nelder-Mead ------------------------------------------------------------------

namespace {

constexpr int kDim = 7;

struct SearchBox {
    SearchPoint lo, hi;

    explicit SearchBox(const ParameterBounds &b) {
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::log(b.sigma_t_min);
            hi[c] = std::log(b.sigma_t_max);
            lo[3 + c] = logit(b.albedo_min);
            hi[3 + c] = logit(b.albedo_max);
        }
        lo[6] = b.g_min;
        hi[6] = b.g_max;
    }
    SearchPoint clamp(SearchPoint x) const {
        for (int i = 0; i < kDim; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
        return x;
    }
    double width(int i) const { return hi[i] - lo[i]; }
};

struct Vertex {
    SearchPoint x;
    double f;
};

/// Largest coordinate distance from the best vertex, relative to the box width.
double simplex_diameter(const std::vector<Vertex> &s, const SearchBox &box) {
    double d = 0.0;
    for (size_t v = 1; v < s.size(); ++v)
        for (int i = 0; i < kDim; ++i) d = std::max(d, std::abs(s[v].x[i] - s[0].x[i]) / box.width(i));
    return d;
}

class SimplexRun {
  public:
    SimplexRun(const InverseProblem &problem, const OptimizerConfig &cfg, const SearchBox &box, int restart,
               int &evaluations, std::vector<TracePoint> &trace)
        : problem_(problem), cfg_(cfg), box_(box), restart_(restart), evals_(evaluations), trace_(trace) {}

    double eval(const SearchPoint &x) {
        ++evals_;
        return objective(problem_, from_search_space(box_.clamp(x)), spp(), cfg_.seed);
    }

    int spp() const { return cfg_.spp_schedule[stage_]; }
    bool last_stage() const { return stage_ + 1 == cfg_.spp_schedule.size(); }

    void record() { trace_.push_back({restart_, evals_, spp(), simplex_.front().f}); }

    /// Runs until converged at the last level or `budget` evaluations are spent.
    /// Returns the best point and its loss at the last spp level.
    std::pair<Vertex, bool> run(const SearchPoint &start, int budget) {
        const int limit = evals_ + budget;
        simplex_.clear();
        simplex_.push_back({box_.clamp(start), 0.0});
        for (int i = 0; i < kDim; ++i) {
            SearchPoint x = simplex_[0].x;
            const double step = 0.15 * box_.width(i);
            x[i] = (x[i] + step <= box_.hi[i]) ? x[i] + step : x[i] - step;
            simplex_.push_back({x, 0.0});
        }
        if (!evaluate_all(limit)) return finish(limit);
        sort();
        record();

        bool converged = false;
        while (evals_ < limit) {
            const double diam = simplex_diameter(simplex_, box_);
            if (!last_stage() && diam < cfg_.stage_trigger) {
                ++stage_;
                if (!evaluate_all(limit)) break;
                sort();
                record();
                continue;
            }
            if (last_stage() && diam < cfg_.tolerance) {
                converged = true;
                break;
            }
            const double before = simplex_.front().f;
            if (!step(limit)) break;
            sort();
            if (simplex_.front().f < before) record();
        }
        auto [best, ok] = finish(limit);
        return {best, converged && ok};
    }

  private:
    bool evaluate_all(int limit) {
        if (evals_ + static_cast<int>(simplex_.size()) > limit) return false;
        for (auto &v : simplex_) v.f = eval(v.x);
        evaluated_stage_ = static_cast<int>(stage_);
        return true;
    }

    void sort() {
        std::stable_sort(simplex_.begin(), simplex_.end(), [](const Vertex &a, const Vertex &b) { return a.f < b.f; });
    }

    SearchPoint combine(const SearchPoint &a, const SearchPoint &b, double t) const {
        SearchPoint x;
        for (int i = 0; i < kDim; ++i) x[i] = a[i] + t * (b[i] - a[i]);
        return box_.clamp(x);
    }

    /// One Nelder-Mead iteration (reflection 1, expansion 2, contraction 1/2,
    /// shrink 1/2). Returns false when the budget ran out mid-step.
    bool step(int limit) {
        const size_t n = simplex_.size() - 1;
        SearchPoint centroid{};
        for (size_t v = 0; v < n; ++v)
            for (int i = 0; i < kDim; ++i) centroid[i] += simplex_[v].x[i] / static_cast<double>(n);
        Vertex &worst = simplex_.back();
        const auto budget_left = [&] { return evals_ < limit; };

        const SearchPoint xr = combine(centroid, worst.x, -1.0);
        if (!budget_left()) return false;
        const double fr = eval(xr);
        if (fr < simplex_.front().f) {
            const SearchPoint xe = combine(centroid, worst.x, -2.0);
            if (!budget_left()) return false;
            const double fe = eval(xe);
            worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            return true;
        }
        if (fr < simplex_[n - 1].f) {
            worst = {xr, fr};
            return true;
        }
        const bool outside = fr < worst.f;
        const SearchPoint xc = outside ? combine(centroid, xr, 0.5) : combine(centroid, worst.x, 0.5);
        if (!budget_left()) return false;
        const double fc = eval(xc);
        if (fc < std::min(fr, worst.f)) {
            worst = {xc, fc};
            return true;
        }
        for (size_t v = 1; v < simplex_.size(); ++v) {
            if (!budget_left()) return false;
            simplex_[v].x = combine(simplex_[0].x, simplex_[v].x, 0.5);
            simplex_[v].f = eval(simplex_[v].x);
        }
        return true;
    }

    /// Best vertex with its loss at the final spp level (one extra evaluation if
    /// the run stopped early), or the best-so-far when no budget remains.
    std::pair<Vertex, bool> finish(int limit) {
        if (evaluated_stage_ < 0) return {{simplex_.front().x, std::numeric_limits<double>::infinity()}, false};
        sort();
        Vertex best = simplex_.front();
        if (!last_stage() || evaluated_stage_ != static_cast<int>(stage_)) {
            stage_ = cfg_.spp_schedule.size() - 1;
            if (evals_ >= limit + 1) return {{best.x, std::numeric_limits<double>::infinity()}, false};
            best.f = eval(best.x);
            record_point(best.f);
        }
        return {best, true};
    }

    void record_point(double f) { trace_.push_back({restart_, evals_, spp(), f}); }

    const InverseProblem &problem_;
    const OptimizerConfig &cfg_;
    const SearchBox &box_;
    int restart_;
    int &evals_;
    std::vector<TracePoint> &trace_;
    std::vector<Vertex> simplex_;
    size_t stage_ = 0;
    int evaluated_stage_ = -1;
};

SearchPoint neutral_start(const SearchBox &box) {
    SearchPoint x;
    for (int i = 0; i < kDim; ++i) x[i] = 0.5 * (box.lo[i] + box.hi[i]);
    return x;
}

}  // namespace

EstimationResult estimate_sss(const InverseProblem &problem, const OptimizerConfig &config) {
    problem.validate();
    config.validate();
    const SearchBox box(config.bounds);
    EstimationResult result;
    // Reserve evaluations for the final-level validation of every restart and the
    // similarity slice.
    const int reserve = config.restarts + config.similarity_slice_points;
    if (config.max_evals <= reserve + (kDim + 1) * config.restarts)
        throw InputError("max_evals too small for the requested restarts");

    Pcg32 rng(hash_values({config.seed, 0x5eedULL}));
    double best_f = std::numeric_limits<double>::infinity();
    bool best_converged = false;
    for (int r = 0; r < config.restarts; ++r) {
        SearchPoint start = neutral_start(box);
        if (r > 0)
            for (int i = 0; i < kDim; ++i) start[i] = box.lo[i] + rng.uniform() * box.width(i);
        const int remaining = config.max_evals - config.similarity_slice_points - result.evaluations;
        const int budget = remaining / (config.restarts - r) - 1;
        SimplexRun run(problem, config, box, r, result.evaluations, result.trace);
        auto [best, converged] = run.run(start, budget);
        const MediumParams params = config.bounds.clamp(from_search_space(box.clamp(best.x)));
        result.restart_losses.push_back(best.f);
        result.restart_params.push_back(params);
        if (best.f < best_f) {
            best_f = best.f;
            result.params = params;
            result.best_restart = r;
            best_converged = converged;
        }
    }
    result.loss = best_f;
    result.converged = best_converged && std::isfinite(best_f);

    // Loss along the similarity direction through the estimate: sigma_t scaled by
    // s, albedo adjusted to keep sigma_t * albedo fixed.
    const int final_spp = config.spp_schedule.back();
    for (int k = 0; k < config.similarity_slice_points; ++k) {
        const double t = config.similarity_slice_points == 1
                             ? 0.0
                             : -1.0 + 2.0 * k / static_cast<double>(config.similarity_slice_points - 1);
        const double s = std::pow(2.0, t);
        MediumParams p = result.params;
        for (int c = 0; c < 3; ++c) {
            p.sigma_t[c] *= s;
            p.albedo[c] /= s;
        }
        p = config.bounds.clamp(p);
        ++result.evaluations;
        result.similarity.scale.push_back(s);
        result.similarity.loss.push_back(objective(problem, p, final_spp, config.seed));
    }

    InverseProblem l1 = problem;
    l1.loss = LossKind::L1;
    result.reconstruction_residual = objective(l1, result.params, final_spp, config.seed);
    return result;
}

// --- Reconstruction ---------------------------------------------------------------

CaptureSet capture_variance(const StokesImage &variance) {
    CaptureSet out;
    for (auto &im : out.images) im = ImageD(variance.width(), variance.height());
    for (size_t p = 0; p < static_cast<size_t>(variance.width()) * variance.height(); ++p) {
        for (int c = 0; c < 3; ++c) {
            const double a = std::sqrt(std::max(0.0, variance.s[0].at(p, c)));
            const double b = std::sqrt(std::max(0.0, variance.s[1].at(p, c)));
            const double d = std::sqrt(std::max(0.0, variance.s[2].at(p, c)));
            out[0].at(p, c) = 0.25 * sqr(a + b);
            out[1].at(p, c) = 0.25 * sqr(a + d);
            out[2].at(p, c) = 0.25 * sqr(a + b);
            out[3].at(p, c) = 0.25 * sqr(a + d);
        }
    }
    return out;
}

Reconstruction reconstruction_residual(const CaptureSet &pure_bsdf, const CaptureSet &pure_bsdf_variance,
                                       const MediumParams &params, const InverseProblem &problem, int spp,
                                       uint64_t seed) {
    problem.validate();
    if (!pure_bsdf.consistent() || pure_bsdf.width() != problem.observations.width() ||
        pure_bsdf.height() != problem.observations.height())
        throw RefusalError("reconstruction_residual: pure-BSDF captures do not match the observations");
    const bool have_var = pure_bsdf_variance.width() > 0;
    if (have_var && (!pure_bsdf_variance.consistent() || pure_bsdf_variance.width() != pure_bsdf.width() ||
                     pure_bsdf_variance.height() != pure_bsdf.height()))
        throw RefusalError("reconstruction_residual: pure-BSDF variance does not match the captures");

    const Mask mask = problem.effective_mask();
    const StokesRender full =
        render_masked(problem.scene, params, mask, spp, seed, RenderMode::Full, problem.max_bounces, problem.threads);
    const StokesRender sss = render_masked(problem.scene, params, mask, spp, seed, RenderMode::SssOnly,
                                           problem.max_bounces, problem.threads);
    Reconstruction out;
    out.captures = capture_images(full.mean);
    out.sss_only = capture_images(sss.mean);
    const CaptureSet var_full = capture_variance(full.variance);
    const CaptureSet var_sss = capture_variance(sss.variance);

    size_t pixels = 0, within = 0, tests = 0;
    for (size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        ++pixels;
        for (int a = 0; a < 4; ++a) {
            for (int c = 0; c < 3; ++c) {
                const double obs = static_cast<float>(problem.observations[a].at(p, c));
                out.per_angle_l1[a] += std::abs(static_cast<float>(out.captures[a].at(p, c)) - obs);
                const double diff = out.captures[a].at(p, c) - (pure_bsdf[a].at(p, c) + out.sss_only[a].at(p, c));
                double var = var_full[a].at(p, c) + var_sss[a].at(p, c);
                if (have_var) var += pure_bsdf_variance[a].at(p, c);
                const double scale = std::max({std::abs(out.captures[a].at(p, c)), std::abs(pure_bsdf[a].at(p, c)), 1.0});
                // Rounding slack for bitwise-equal path sets summed in different order.
                const double sigma = std::sqrt(var) + 1e-12 * scale;
                const double ratio = std::abs(diff) / sigma;
                out.max_discrepancy_sigma = std::max(out.max_discrepancy_sigma, ratio);
                within += ratio <= 3.0;
                ++tests;
            }
        }
    }
    for (auto &v : out.per_angle_l1) v /= static_cast<double>(pixels * 3);
    out.loss = 0.25 * (out.per_angle_l1[0] + out.per_angle_l1[1] + out.per_angle_l1[2] + out.per_angle_l1[3]);
    out.fraction_within_3sigma = static_cast<double>(within) / static_cast<double>(tests);
    return out;
}

// --- Illumination -----------------------------------------------------------------

IlluminationEstimate estimate_illumination(const Scene &scene, const CaptureSet &observations, int spp,
                                           uint64_t seed, const Mask &mask, int threads) {
    if (!scene.shape) throw InputError("estimate_illumination: scene is not finalized");
    if (!observations.consistent() || observations.width() != scene.camera.width ||
        observations.height() != scene.camera.height)
        throw InputError("estimate_illumination: observations do not match the camera resolution");
    if (mask.size() > 0 && (mask.width() != scene.camera.width || mask.height() != scene.camera.height))
        throw InputError("estimate_illumination: mask does not match the camera resolution");

    const int lights = kShCount + (scene.has_flash ? 1 : 0);
    const int unknowns = 3 * kShCount + (scene.has_flash ? 1 : 0);
    RenderConfig cfg;
    cfg.spp = spp;
    cfg.seed = seed;
    cfg.clamp_env = false;
    cfg.threads = threads;
    if (mask.size() > 0) cfg.pixel_mask = mask;

    // Transport images of each unit light. The flash stays in place as an
    // occluder (zero emission) in the environment renders so every render traces
    // the same paths.
    std::vector<CaptureSet> basis;
    for (int l = 0; l < lights; ++l) {
        Scene s = scene;
        s.env = SHEnvironment{};
        s.flash.intensity = 0.0;
        if (l < kShCount)
            for (auto &ch : s.env.coeffs) ch[l] = 1.0;
        else
            s.flash.intensity = 1.0;
        basis.push_back(capture_images(render_stokes(s, cfg).mean));
    }

    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(unknowns, unknowns);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    double bb = 0.0;
    size_t rows = 0;
    std::vector<int> cols;
    std::vector<double> vals;
    const size_t pixel_count = static_cast<size_t>(scene.camera.width) * scene.camera.height;
    for (size_t p = 0; p < pixel_count; ++p) {
        if (mask.size() > 0 && !mask[p]) continue;
        for (int a = 0; a < 4; ++a) {
            for (int c = 0; c < 3; ++c) {
                cols.clear();
                vals.clear();
                for (int k = 0; k < kShCount; ++k) {
                    cols.push_back(c * kShCount + k);
                    vals.push_back(basis[k][a].at(p, c));
                }
                if (scene.has_flash) {
                    cols.push_back(3 * kShCount);
                    vals.push_back(basis[kShCount][a].at(p, c));
                }
                const double b = observations[a].at(p, c);
                for (size_t i = 0; i < cols.size(); ++i) {
                    rhs[cols[i]] += vals[i] * b;
                    for (size_t j = 0; j < cols.size(); ++j) normal(cols[i], cols[j]) += vals[i] * vals[j];
                }
                bb += b * b;
                ++rows;
            }
        }
    }

    IlluminationEstimate out;
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
        const double lmax = eig.eigenvalues().maxCoeff();
        const double lmin = std::max(0.0, eig.eigenvalues().minCoeff());
        out.condition_number = lmin > 0.0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
        out.rank_deficient = !(out.condition_number < 1e10);
    }

    // Active-set least squares: only the constant SH terms and the flash are
    // sign-constrained.
    std::vector<int> constrained{0, kShCount, 2 * kShCount};
    if (scene.has_flash) constrained.push_back(3 * kShCount);
    std::vector<bool> fixed(unknowns, false);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(unknowns);
    const auto solve_free = [&]() {
        std::vector<int> free;
        for (int i = 0; i < unknowns; ++i)
            if (!fixed[i]) free.push_back(i);
        Eigen::MatrixXd n(free.size(), free.size());
        Eigen::VectorXd r(free.size());
        for (size_t i = 0; i < free.size(); ++i) {
            r[i] = rhs[free[i]];
            for (size_t j = 0; j < free.size(); ++j) n(i, j) = normal(free[i], free[j]);
        }
        const Eigen::VectorXd y = n.completeOrthogonalDecomposition().solve(r);
        x.setZero();
        for (size_t i = 0; i < free.size(); ++i) x[free[i]] = y[i];
    };
    for (int iter = 0; iter < 64; ++iter) {
        solve_free();
        int worst = -1;
        for (int i : constrained)
            if (!fixed[i] && x[i] < 0.0 && (worst < 0 || x[i] < x[worst])) worst = i;
        if (worst >= 0) {
            fixed[worst] = true;
            continue;
        }
        const Eigen::VectorXd grad = rhs - normal * x;  // negative gradient / 2
        int release = -1;
        for (int i : constrained)
            if (fixed[i] && grad[i] > 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()) &&
                (release < 0 || grad[i] > grad[release]))
                release = i;
        if (release < 0) break;
        fixed[release] = false;
    }

    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < kShCount; ++k) out.env.coeffs[c][k] = x[c * kShCount + k];
    out.flash_intensity = scene.has_flash ? x[3 * kShCount] : 0.0;
    const double sse = bb - 2.0 * x.dot(rhs) + x.dot(normal * x);
    out.loss = rows > 0 ? std::max(0.0, sse) / static_cast<double>(rows) : 0.0;
    return out;
}

}  // namespace polsss
