// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end checks of the command-line tool.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polsss/dataset.h"
#include "polsss/pfm.h"
#include "polsss/scene.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

using namespace polsss;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "polsss_cli_test";

int run(const std::string &args) {
    const std::string cmd = std::string(POLSSS_CLI_PATH) + " " + args + " >" + (kWork / "stdout.txt").string() +
                            " 2>" + (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::set<std::string> listing(const fs::path &dir) {
    std::set<std::string> names;
    for (const auto &e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
    return names;
}

fs::path write_scene(const std::string &name, const json &doc) {
    const fs::path p = kWork / name;
    std::ofstream(p) << doc.dump(2);
    return p;
}

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
    ~Workspace() { fs::remove_all(kWork); }
};

}  // namespace

TEST_CASE("render writes captures, ground truth and a summary") {
    Workspace ws;
    const fs::path scene = write_scene("scene.json", scene_to_json(canonical_scene(24)));
    REQUIRE(run("render " + scene.string() + " --out " + (kWork / "full").string() + " --spp 4") == 0);
    const std::set<std::string> expected{"i000.pfm", "i045.pfm", "i090.pfm", "i135.pfm", "b000.pfm", "b045.pfm",
                                         "b090.pfm", "b135.pfm", "normal.pfm", "depth.pfm", "mask.pfm",
                                         "summary.json"};
    CHECK(listing(kWork / "full") == expected);
    const json summary = json::parse(slurp(kWork / "full" / "summary.json"));
    CHECK(summary.at("masked_mean_dop").get<double>() >= 0.0);
    CHECK(read_pfm((kWork / "full" / "i000.pfm").string()).width() == 24);

    REQUIRE(run("render " + scene.string() + " --out " + (kWork / "pure").string() +
                " --spp 4 --mode pure_bsdf") == 0);
    for (const auto &name : listing(kWork / "pure")) CHECK((name[0] == 'b' || name == "summary.json"));
    CHECK(listing(kWork / "pure").count("b000.pfm") == 1);
    CHECK(listing(kWork / "pure").count("i000.pfm") == 0);
}

TEST_CASE("output is bit-identical across worker counts") {
    Workspace ws;
    const fs::path scene = write_scene("scene.json", scene_to_json(canonical_scene(32)));
    REQUIRE(run("--threads 1 render " + scene.string() + " --out " + (kWork / "t1").string() + " --spp 4") == 0);
    REQUIRE(run("--threads 8 render " + scene.string() + " --out " + (kWork / "t8").string() + " --spp 4") == 0);
    for (const char *name : {"i000.pfm", "i045.pfm", "i090.pfm", "i135.pfm", "b090.pfm", "depth.pfm"})
        CHECK(sha256_file((kWork / "t1" / name).string()) == sha256_file((kWork / "t8" / name).string()));
    CHECK(slurp(kWork / "t1" / "summary.json") == slurp(kWork / "t8" / "summary.json"));
}

TEST_CASE("invalid configuration exits with a usage error") {
    Workspace ws;
    json doc = scene_to_json(canonical_scene(16));
    doc["medium"]["albedo"][2] = 3.0;
    const fs::path bad = write_scene("bad.json", doc);
    CHECK(run("render " + bad.string() + " --out " + (kWork / "x").string()) == 2);
    CHECK(slurp(kWork / "stderr.txt").find("/medium/albedo/2") != std::string::npos);
    CHECK(run("render " + (kWork / "missing.json").string()) == 2);
    CHECK(run("render") == 2);
    CHECK(run("frobnicate") == 2);
    const fs::path good = write_scene("good.json", scene_to_json(canonical_scene(16)));
    CHECK(run("render " + good.string() + " --mode sideways") == 2);
}

TEST_CASE("analyze produces polarimetric maps") {
    Workspace ws;
    const fs::path scene = write_scene("scene.json", scene_to_json(canonical_scene(16)));
    REQUIRE(run("render " + scene.string() + " --out " + (kWork / "r").string() + " --spp 2") == 0);
    REQUIRE(run("analyze " + (kWork / "r").string() + " --out " + (kWork / "a").string()) == 0);
    CHECK(listing(kWork / "a") == std::set<std::string>{"dop.pfm", "aop.pfm", "imax.pfm", "imin.pfm", "analysis.json"});
    const ImageF dop = read_pfm((kWork / "a" / "dop.pfm").string());
    for (float v : dop.data()) CHECK((v >= 0.0f && v <= 1.0f + 1e-5f));

    fs::remove(kWork / "r" / "i045.pfm");
    CHECK(run("analyze " + (kWork / "r").string() + " --out " + (kWork / "a2").string()) == 2);
    CHECK(slurp(kWork / "stderr.txt").find("i045") != std::string::npos);
}

TEST_CASE("dataset generation and inversion from the command line") {
    Workspace ws;
    REQUIRE(run("dataset gen --n 1 --out " + (kWork / "ds").string() + " --spp 4 --res 16 --seed 3") == 0);
    CHECK(fs::exists(kWork / "ds" / "manifest.json"));
    const fs::path rec = kWork / "ds" / "record_000000";
    CHECK(load_record(rec.string()).warnings.empty());

    const json gt = json::parse(slurp(rec / "gt.json"));
    const fs::path scene = write_scene("scene.json", gt.at("scene"));
    const fs::path cfg = write_scene("opt.json", json{{"max_evals", 40}, {"spp_schedule", {2, 4}}, {"restarts", 1},
                                                      {"similarity_slice_points", 1}});
    REQUIRE(run("invert --scene " + scene.string() + " --obs " + rec.string() + " --config " + cfg.string() +
                " --out " + (kWork / "inv").string()) == 0);
    const json result = json::parse(slurp(kWork / "inv" / "result.json"));
    CHECK(result.at("evaluations").get<int>() <= 40);
    CHECK(result.at("albedo").size() == 3);
    for (const char *name : {"r000.pfm", "r045.pfm", "r090.pfm", "r135.pfm"}) CHECK(fs::exists(kWork / "inv" / name));

    const fs::path bad_cfg = write_scene("bad_opt.json", json{{"max_evals", 10}, {"temperature", 3}});
    CHECK(run("invert --scene " + scene.string() + " --obs " + rec.string() + " --config " + bad_cfg.string()) == 2);

    // Corrupt a stored capture: the record is refused as an integrity failure.
    {
        std::fstream f(rec / "i000.pfm", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(30);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(load_record(rec.string()), IntegrityError);
}

TEST_CASE("selftest exposes its hooks") {
    Workspace ws;
    CHECK(run("selftest --out " + (kWork / "st.json").string()) == 0);
    CHECK(json::parse(slurp(kWork / "st.json")).at("passed") == true);

    CHECK(run("selftest --eta-override 1.0 --out " + (kWork / "eta.json").string()) == 0);
    bool skipped = false;
    const json eta_report = json::parse(slurp(kWork / "eta.json"));
    for (const auto &c : eta_report.at("cases"))
        if (c.at("name") == "fresnel_brewster") skipped = c.at("status") == "skip";
    CHECK(skipped);

    CHECK(run("selftest --mutate-hg-scale 1.05") == 1);
    CHECK(slurp(kWork / "stdout.txt").find("hg_eval_normalization") != std::string::npos);
}
