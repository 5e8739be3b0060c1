// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// polsss: render, analyze, dataset gen, invert, selftest.
//
// Exit codes: 0 success, 1 test/invariant failure or runtime error, 2 usage or
// configuration error.

#include "polsss/dataset.h"
#include "polsss/errors.h"
#include "polsss/inverse.h"
#include "polsss/pfm.h"
#include "polsss/renderer.h"
#include "polsss/selftest.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polsss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

bool g_verbose = false;

void log(const std::string &msg) {
    if (g_verbose) std::cerr << msg << "\n";
}

void write_json(const fs::path &path, const json &j) { write_file_atomic(path.string(), j.dump(2) + "\n"); }

json stats_json(const RenderStats &s) {
    return {{"paths", s.paths},
            {"medium_paths", s.medium_paths},
            {"leaked_paths", s.leaked_paths},
            {"truncated_paths", s.truncated_paths}};
}

// --- render -------------------------------------------------------------------------

struct RenderArgs {
    std::string scene;
    std::string out = ".";
    int spp = 64;
    int res = 0;
    std::optional<uint64_t> seed;
    std::string mode = "full";
    int max_bounces = 64;
};

int cmd_render(const RenderArgs &a, int threads) {
    Scene scene = load_scene(a.scene);
    if (a.res > 0) {
        scene.camera.width = scene.camera.height = a.res;
        scene.finalize();
    }
    RenderConfig cfg;
    cfg.spp = a.spp;
    cfg.seed = a.seed.value_or(scene.seed);
    cfg.mode = render_mode_from_string(a.mode);
    cfg.max_bounces = a.max_bounces;
    cfg.threads = threads;
    cfg.with_pure_bsdf = cfg.mode == RenderMode::Full;
    if (g_verbose) cfg.progress = [](double f) { std::cerr << "\rrender " << static_cast<int>(100 * f) << "%"; };
    const RenderOutputs out = render(scene, cfg);
    if (g_verbose) std::cerr << "\n";

    const fs::path dir(a.out);
    fs::create_directories(dir);
    if (cfg.mode == RenderMode::PureBsdf) {
        for (int i = 0; i < 4; ++i) write_pfm((dir / kPureBsdfFiles[i]).string(), out.captures[i]);
        return kExitOk;
    }
    for (int i = 0; i < 4; ++i) write_pfm((dir / kCaptureFiles[i]).string(), out.captures[i]);
    if (out.pure_bsdf_captures)
        for (int i = 0; i < 4; ++i) write_pfm((dir / kPureBsdfFiles[i]).string(), (*out.pure_bsdf_captures)[i]);
    write_pfm((dir / "normal.pfm").string(), out.gt.normal);
    write_pfm((dir / "depth.pfm").string(), out.gt.depth);
    write_pfm((dir / "mask.pfm").string(), mask_image(out.gt.mask));

    json summary = {{"mode", to_string(cfg.mode)},
                    {"spp", cfg.spp},
                    {"seed", cfg.seed},
                    {"width", scene.camera.width},
                    {"height", scene.camera.height},
                    {"max_bounces", cfg.max_bounces},
                    {"masked_pixels", out.gt.mask.count()},
                    {"stats", stats_json(out.stats)}};
    if (out.gt.mask.count() > 0) {
        const PolarimetricSummary ps = polarimetric_summary(out.polarimetric, out.gt.mask);
        Rgb mean_s0{};
        for (size_t p = 0; p < out.gt.mask.size(); ++p)
            if (out.gt.mask[p])
                for (int c = 0; c < 3; ++c) mean_s0[c] += out.stokes.at(p, c).s0();
        for (auto &v : mean_s0) v /= static_cast<double>(out.gt.mask.count());
        summary["masked_mean_dop"] = ps.mean_dop;
        summary["masked_aop_mode_deg"] = rad_to_deg(ps.aop_mode);
        summary["masked_mean_s0"] = mean_s0;
        summary["dop_histogram"] = ps.dop_histogram;
    }
    write_json(dir / "summary.json", summary);
    log("wrote " + dir.string());
    return kExitOk;
}

// --- analyze ------------------------------------------------------------------------

int cmd_analyze(const std::string &capture_dir, const std::string &out_dir) {
    const fs::path dir(capture_dir);
    CaptureSet captures;
    for (int i = 0; i < 4; ++i) {
        const fs::path f = dir / kCaptureFiles[i];
        if (!fs::exists(f))
            throw NotFoundError("missing capture for angle " + std::to_string(CaptureSet::kAnglesDeg[i]) +
                                " degrees: " + f.string());
        captures[i] = to_double(read_pfm(f.string()));
    }
    const StokesImage stokes = invert_capture(captures);
    Mask mask(stokes.width(), stokes.height(), true);
    if (fs::exists(dir / "mask.pfm")) {
        const ImageF m = read_pfm((dir / "mask.pfm").string());
        if (m.width() != mask.width() || m.height() != mask.height())
            throw InputError("mask.pfm does not match the captures");
        for (size_t p = 0; p < mask.size(); ++p) mask.set(p, m.at(p, 0) > 0.5f);
    }
    const PolarimetricMaps maps = polarimetric_maps(stokes, mask);
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_pfm((out / "dop.pfm").string(), maps.dop);
    write_pfm((out / "aop.pfm").string(), maps.aop);
    write_pfm((out / "imax.pfm").string(), maps.imax);
    write_pfm((out / "imin.pfm").string(), maps.imin);
    json stats = {{"pixels", mask.count()}, {"degenerate_aop", maps.degenerate_aop_count}};
    if (mask.count() > 0) {
        const PolarimetricSummary ps = polarimetric_summary(maps, mask);
        stats["masked_mean_dop"] = ps.mean_dop;
        stats["aop_mode_deg"] = rad_to_deg(ps.aop_mode);
        stats["dop_histogram"] = ps.dop_histogram;
        stats["aop_histogram"] = ps.aop_histogram;
    }
    write_json(out / "analysis.json", stats);
    return kExitOk;
}

// --- dataset ------------------------------------------------------------------------

struct DatasetArgs {
    int n = 10;
    std::string out;
    uint64_t seed = 1;
    std::string ranges;
    int spp = 64;
    int res = 128;
    int max_bounces = 64;
};

int cmd_dataset_gen(const DatasetArgs &a, int threads) {
    const SamplingRanges ranges = a.ranges.empty() ? SamplingRanges{} : load_ranges(a.ranges);
    GenerateConfig cfg;
    cfg.n = a.n;
    cfg.master_seed = a.seed;
    cfg.spp = a.spp;
    cfg.resolution = a.res;
    cfg.max_bounces = a.max_bounces;
    cfg.threads = threads;
    cfg.on_record = [](int i, bool rendered) {
        log("record " + std::to_string(i) + (rendered ? " rendered" : " reused"));
    };
    const GenerateResult r = generate(a.out, ranges, cfg);
    std::cout << json{{"records", a.n}, {"rendered", r.rendered.size()}, {"reused", r.skipped.size()}}.dump() << "\n";
    return kExitOk;
}

// --- invert -------------------------------------------------------------------------

struct InvertArgs {
    std::string scene;
    std::string obs;
    std::string config;
    std::string out = ".";
};

OptimizerConfig optimizer_from_json(const json &j, LossKind &loss) {
    OptimizerConfig c;
    const std::set<std::string> known{"algorithm", "max_evals", "spp_schedule", "stage_trigger", "tolerance", "seed",
                                      "restarts",  "bounds",    "loss",         "similarity_slice_points"};
    if (!j.is_object()) throw SchemaError("", "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw SchemaError("/" + it.key(), "unknown field");
    try {
        if (j.contains("algorithm")) c.algorithm = j.at("algorithm").get<std::string>();
        if (j.contains("max_evals")) c.max_evals = j.at("max_evals").get<int>();
        if (j.contains("spp_schedule")) c.spp_schedule = j.at("spp_schedule").get<std::vector<int>>();
        if (j.contains("stage_trigger")) c.stage_trigger = j.at("stage_trigger").get<double>();
        if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
        if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
        if (j.contains("similarity_slice_points"))
            c.similarity_slice_points = j.at("similarity_slice_points").get<int>();
        if (j.contains("loss")) loss = loss_kind_from_string(j.at("loss").get<std::string>());
        if (j.contains("bounds")) {
            const json &b = j.at("bounds");
            if (b.contains("sigma_t")) std::tie(c.bounds.sigma_t_min, c.bounds.sigma_t_max) = b.at("sigma_t").get<std::pair<double, double>>();
            if (b.contains("albedo")) std::tie(c.bounds.albedo_min, c.bounds.albedo_max) = b.at("albedo").get<std::pair<double, double>>();
            if (b.contains("g")) std::tie(c.bounds.g_min, c.bounds.g_max) = b.at("g").get<std::pair<double, double>>();
        }
    } catch (const json::exception &e) {
        throw SchemaError("", std::string("optimizer config: ") + e.what());
    }
    return c;
}

int cmd_invert(const InvertArgs &a, int threads) {
    InverseProblem problem;
    problem.scene = load_scene(a.scene);
    problem.threads = threads;
    OptimizerConfig oc;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw NotFoundError("cannot open optimizer config: " + a.config);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error &e) {
            throw SchemaError("", std::string("invalid JSON: ") + e.what());
        }
        oc = optimizer_from_json(j, problem.loss);
    }
    const fs::path obs(a.obs);
    for (int i = 0; i < 4; ++i) {
        const fs::path f = obs / kCaptureFiles[i];
        if (!fs::exists(f)) throw NotFoundError("missing observation " + f.string());
        problem.observations[i] = to_double(read_pfm(f.string()));
    }
    if (problem.observations.width() != problem.scene.camera.width ||
        problem.observations.height() != problem.scene.camera.height) {
        problem.scene.camera.width = problem.observations.width();
        problem.scene.camera.height = problem.observations.height();
        problem.scene.finalize();
    }
    if (fs::exists(obs / "mask.pfm")) {
        const ImageF m = read_pfm((obs / "mask.pfm").string());
        problem.mask = Mask(m.width(), m.height());
        for (size_t p = 0; p < problem.mask.size(); ++p) problem.mask.set(p, m.at(p, 0) > 0.5f);
    }
    problem.validate();

    const EstimationResult r = estimate_sss(problem, oc);
    const fs::path out(a.out);
    fs::create_directories(out);
    json trace = json::array();
    for (const auto &t : r.trace)
        trace.push_back({{"restart", t.restart}, {"evaluation", t.evaluation}, {"spp", t.spp}, {"loss", t.loss}});
    json restarts = json::array();
    for (size_t i = 0; i < r.restart_losses.size(); ++i)
        restarts.push_back({{"loss", r.restart_losses[i]},
                            {"sigma_t", r.restart_params[i].sigma_t},
                            {"albedo", r.restart_params[i].albedo},
                            {"g", r.restart_params[i].g}});
    const json report = {{"sigma_t", r.params.sigma_t},
                         {"albedo", r.params.albedo},
                         {"g", r.params.g},
                         {"loss", r.loss},
                         {"loss_kind", to_string(problem.loss)},
                         {"evaluations", r.evaluations},
                         {"converged", r.converged},
                         {"best_restart", r.best_restart},
                         {"reconstruction_residual", r.reconstruction_residual},
                         {"restarts", restarts},
                         {"trace", trace},
                         {"similarity_slice", {{"scale", r.similarity.scale}, {"loss", r.similarity.loss}}}};
    write_json(out / "result.json", report);

    Scene est = problem.scene;
    est.medium = r.params;
    RenderConfig rc;
    rc.spp = oc.spp_schedule.back();
    rc.seed = oc.seed;
    rc.threads = threads;
    const CaptureSet recon = capture_images(render_stokes(est, rc).mean);
    const std::array<const char *, 4> names{"r000.pfm", "r045.pfm", "r090.pfm", "r135.pfm"};
    for (int i = 0; i < 4; ++i) write_pfm((out / names[i]).string(), recon[i]);
    std::cout << report.dump() << "\n";
    return kExitOk;
}

// --- selftest -----------------------------------------------------------------------

int cmd_selftest(std::optional<double> eta, std::optional<double> hg_scale, const std::string &out, int threads) {
    SelfTestOptions opts;
    opts.threads = threads;
    if (eta) opts.eta = *eta;
    if (hg_scale) testing::set_hg_normalization_scale(*hg_scale);
    const SelfTestReport report = run_selftest(opts);
    testing::set_hg_normalization_scale(1.0);
    const json j = report.to_json();
    if (!out.empty()) write_json(out, j);
    std::cout << j.dump(2) << "\n";
    return report.passed() ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Polarized subsurface-scattering renderer and inverse solver"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: POLSSS_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--verbose,-v", g_verbose, "Progress on stderr");

    RenderArgs ra;
    auto *render_cmd = app.add_subcommand("render", "Render a scene to polarizer captures and ground truth");
    render_cmd->add_option("scene", ra.scene, "Scene JSON")->required();
    render_cmd->add_option("--out", ra.out, "Output directory");
    render_cmd->add_option("--spp", ra.spp, "Samples per pixel")->check(CLI::PositiveNumber);
    render_cmd->add_option("--res", ra.res, "Square resolution override")->check(CLI::PositiveNumber);
    render_cmd->add_option("--seed", ra.seed, "Render seed (default: scene seed)");
    render_cmd->add_option("--mode", ra.mode, "full | pure_bsdf | sss_only | unpolarized")
        ->check(CLI::IsMember({"full", "pure_bsdf", "sss_only", "unpolarized"}));
    render_cmd->add_option("--max-bounces", ra.max_bounces, "Path length limit")->check(CLI::PositiveNumber);

    std::string analyze_dir, analyze_out = ".";
    auto *analyze_cmd = app.add_subcommand("analyze", "DoP/AoP/max/min maps from four captures");
    analyze_cmd->add_option("captures", analyze_dir, "Directory with i000/i045/i090/i135.pfm")->required();
    analyze_cmd->add_option("--out", analyze_out, "Output directory");

    DatasetArgs da;
    auto *dataset_cmd = app.add_subcommand("dataset", "Synthetic dataset tools");
    dataset_cmd->require_subcommand(1);
    auto *gen_cmd = dataset_cmd->add_subcommand("gen", "Generate records");
    gen_cmd->add_option("--n", da.n, "Number of records")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--out", da.out, "Output directory")->required();
    gen_cmd->add_option("--seed", da.seed, "Master seed");
    gen_cmd->add_option("--ranges", da.ranges, "Sampling ranges JSON");
    gen_cmd->add_option("--spp", da.spp, "Samples per pixel")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--res", da.res, "Square resolution")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--max-bounces", da.max_bounces, "Path length limit")->check(CLI::PositiveNumber);

    InvertArgs ia;
    auto *invert_cmd = app.add_subcommand("invert", "Estimate medium parameters from observations");
    invert_cmd->add_option("--scene", ia.scene, "Scene JSON (medium ignored)")->required();
    invert_cmd->add_option("--obs", ia.obs, "Observation directory (record layout)")->required();
    invert_cmd->add_option("--config", ia.config, "Optimizer JSON");
    invert_cmd->add_option("--out", ia.out, "Output directory");

    std::optional<double> eta_override, hg_scale;
    std::string selftest_out;
    auto *selftest_cmd = app.add_subcommand("selftest", "Run the physics invariant suite");
    selftest_cmd->add_option("--out", selftest_out, "Also write the JSON report here");
    selftest_cmd->add_option("--eta-override", eta_override)->group("");
    selftest_cmd->add_option("--mutate-hg-scale", hg_scale)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*render_cmd) return cmd_render(ra, threads);
        if (*analyze_cmd) return cmd_analyze(analyze_dir, analyze_out);
        if (*gen_cmd) return cmd_dataset_gen(da, threads);
        if (*invert_cmd) return cmd_invert(ia, threads);
        if (*selftest_cmd) return cmd_selftest(eta_override, hg_scale, selftest_out, threads);
    } catch (const SchemaError &e) {
        std::cerr << "config error at '" << e.pointer() << "': " << e.what() << "\n";
        return kExitUsage;
    } catch (const NotFoundError &e) {
        std::cerr << "not found: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InputError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IntegrityError &e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
