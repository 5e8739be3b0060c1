// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/selftest.h"

#include "polsss/medium.h"
#include "polsss/renderer.h"
#include "polsss/rng.h"

#include <functional>
#include <sstream>

namespace polsss {

bool SelfTestReport::passed() const {
    for (const auto &c : cases)
        if (c.status == "fail") return false;
    return true;
}

nlohmann::json SelfTestReport::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto &c : cases) list.push_back({{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
    return {{"passed", passed()}, {"cases", list}};
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

SelfTestCase check(const std::string &name, bool ok, const std::string &detail) {
    return {name, ok ? "pass" : "fail", detail};
}

SelfTestCase capture_round_trip() {
    Pcg32 rng(42);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double s0 = 0.01 + 10.0 * rng.uniform();
        const double r = s0 * std::sqrt(rng.uniform());
        const double phi = 2.0 * kPi * rng.uniform();
        const StokesVector s(s0, r * std::cos(phi), r * std::sin(phi));
        const StokesVector back = invert_capture(measure_polarizer(s, 0.0), measure_polarizer(s, kPi / 4),
                                                 measure_polarizer(s, kPi / 2), measure_polarizer(s, 3 * kPi / 4));
        worst = std::max(worst, (back.v - s.v).norm() / s0);
    }
    return check("capture_round_trip", worst <= 1e-12, "max relative error " + fmt(worst));
}

SelfTestCase brewster(double eta) {
    if (eta == 1.0) return {"fresnel_brewster", "skip", "Brewster angle undefined for an index-matched interface"};
    const double theta = brewster_angle(eta);
    const auto f = fresnel(std::cos(theta), eta);
    if (f.tir) return {"fresnel_brewster", "skip", "Brewster angle beyond the critical angle"};
    const DopAop d = dop_aop(reflect_mueller(f) * StokesVector::unpolarized(1.0));
    return check("fresnel_brewster", std::abs(d.dop - 1.0) <= 1e-9, "reflected DoP " + fmt(d.dop));
}

SelfTestCase normal_incidence(double eta) {
    const double expected = sqr((eta - 1.0) / (eta + 1.0));
    const double got = fresnel_reflectance(1.0, eta);
    return check("fresnel_normal_incidence", std::abs(got - expected) <= 1e-12,
                 "R(0) " + fmt(got) + " expected " + fmt(expected));
}

SelfTestCase fresnel_energy(double eta) {
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double c = i / 100.0;
        const auto f = fresnel(c, eta);
        if (f.tir || c == 0.0) continue;
        worst = std::max({worst, std::abs(f.Rs + f.Ts - 1.0), std::abs(f.Rp + f.Tp - 1.0)});
    }
    return check("fresnel_energy", worst <= 1e-12, "max |R + T - 1| " + fmt(worst));
}

SelfTestCase hg_normalization() {
    // Composite Simpson in cos(theta); fine enough for g = 0.9.
    double worst = 0.0;
    for (double g : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        const int n = 20000;
        double sum = hg_eval(-1.0, g) + hg_eval(1.0, g);
        for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * hg_eval(-1.0 + 2.0 * i / n, g);
        const double integral = 2.0 * kPi * sum * (2.0 / n) / 3.0;
        worst = std::max(worst, std::abs(integral - 1.0));
    }
    return check("hg_eval_normalization", worst <= 1e-4, "max |integral - 1| " + fmt(worst));
}

SelfTestCase hg_sampling() {
    bool ok = true;
    std::string detail;
    for (double g : {-0.5, 0.0, 0.5, 0.9}) {
        Pcg32 rng(hash_values({7, static_cast<uint64_t>((g + 1.0) * 1000)}));
        const int n = 200000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double c = hg_sample_cos(g, rng.uniform());
            sum += c;
            sum2 += c * c;
        }
        const double mean = sum / n;
        const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
        ok = ok && std::abs(mean - g) <= 4.0 * se + 1e-12;
        detail += "g=" + fmt(g) + " mean=" + fmt(mean) + " ";
    }
    return check("hg_sample_mean_cosine", ok, detail);
}

SelfTestCase furnace(int threads) {
    Scene s = canonical_scene(32);
    s.env = SHEnvironment::constant(1.0);
    s.has_flash = false;
    s.medium.sigma_t = {200.0, 200.0, 200.0};
    s.medium.albedo = {1.0, 1.0, 1.0};
    s.medium.g = 0.5;
    s.finalize();
    RenderConfig cfg;
    cfg.spp = 64;
    cfg.seed = 3;
    cfg.furnace_test = true;
    cfg.max_bounces = 1 << 20;
    cfg.threads = threads;
    const RenderOutputs out = render(s, cfg);
    double s0 = 0.0, dop = 0.0;
    size_t n = 0;
    for (size_t p = 0; p < out.gt.mask.size(); ++p) {
        if (!out.gt.mask[p]) continue;
        for (int c = 0; c < 3; ++c) {
            s0 += out.stokes.at(p, c).s0();
            dop += out.polarimetric.dop.at(p, c);
            ++n;
        }
    }
    s0 /= static_cast<double>(n);
    dop /= static_cast<double>(n);
    return check("white_furnace", std::abs(s0 - 1.0) <= 0.03 && dop <= 0.01,
                 "masked mean s0 " + fmt(s0) + ", DoP " + fmt(dop));
}

SelfTestCase realizability(double eta, int threads) {
    Scene s = canonical_scene(32);
    s.interface.eta = eta;
    s.finalize();
    RenderConfig cfg;
    cfg.spp = 16;
    cfg.seed = 5;
    cfg.threads = threads;
    const StokesRender r = render_stokes(s, cfg);
    size_t bad = 0;
    for (size_t p = 0; p < static_cast<size_t>(r.mean.width()) * r.mean.height(); ++p)
        for (int c = 0; c < 3; ++c) {
            const StokesVector v = r.mean.at(p, c);
            bad += !(v.realizable(1e-6 * std::max(1.0, v.s0())) && std::isfinite(v.s0()));
        }
    return check("render_realizability", bad == 0, std::to_string(bad) + " non-realizable pixels");
}

SelfTestCase sh_constant() {
    const SHEnvironment env = SHEnvironment::constant(1.0);
    Pcg32 rng(9);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double z = 1.0 - 2.0 * rng.uniform(), phi = 2.0 * kPi * rng.uniform();
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        worst = std::max(worst, std::abs(env.eval(Vec3(r * std::cos(phi), r * std::sin(phi), z), 0) - 1.0));
    }
    return check("sh_constant_environment", worst <= 1e-12, "max deviation " + fmt(worst));
}

}  // namespace

SelfTestReport run_selftest(const SelfTestOptions &options) {
    SelfTestReport report;
    const std::vector<std::function<SelfTestCase()>> suite = {
        [] { return capture_round_trip(); },
        [&] { return brewster(options.eta); },
        [&] { return normal_incidence(options.eta); },
        [&] { return fresnel_energy(options.eta); },
        [] { return hg_normalization(); },
        [] { return hg_sampling(); },
        [] { return sh_constant(); },
        [&] { return furnace(options.threads); },
        [&] { return realizability(options.eta, options.threads); },
    };
    for (const auto &t : suite) {
        try {
            report.cases.push_back(t());
        } catch (const std::exception &e) {
            report.cases.push_back({"exception", "fail", e.what()});
        }
    }
    return report;
}

}  // namespace polsss
