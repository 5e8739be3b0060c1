// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/errors.h"
#include "polsss/medium.h"
#include "polsss/rng.h"

#include <doctest.h>

#include <vector>

using namespace polsss;

namespace {

// Composite Simpson rule for 2 pi * integral of f over mu in [-1, 1].
template <class F>
double sphere_integral(F f, int intervals = 20000) {
    const double h = 2.0 / intervals;
    double s = f(-1.0) + f(1.0);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(-1.0 + i * h);
    return 2.0 * kPi * s * h / 3.0;
}

// Analytic CDF of the HG scattering cosine.
double hg_cdf(double mu, double g) {
    if (std::abs(g) < 1e-12) return 0.5 * (mu + 1.0);
    const double a = (1.0 - g * g) / (2.0 * g);
    return a * (1.0 / std::sqrt(1.0 + g * g - 2.0 * g * mu) - 1.0 / (1.0 + g));
}

}  // namespace

TEST_SUITE("medium") {

TEST_CASE("HG density integrates to one with mean cosine g") {
    for (double g : {-0.9, -0.5, 0.0, 0.3, 0.8, 0.9}) {
        CAPTURE(g);
        CHECK(sphere_integral([&](double mu) { return hg_eval(mu, g); }) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sphere_integral([&](double mu) { return mu * hg_eval(mu, g); }) ==
              doctest::Approx(g).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("the analytic CDF oracle is consistent") {
    for (double g : {-0.7, 0.4}) {
        CHECK(hg_cdf(-1.0, g) == doctest::Approx(0.0).scale(1.0));
        CHECK(hg_cdf(1.0, g) == doctest::Approx(1.0));
    }
}

TEST_CASE("sampled cosines follow the HG distribution") {
    for (double g : {-0.8, -0.3, 0.0, 0.5, 0.9}) {
        CAPTURE(g);
        Pcg32 rng(1234 + static_cast<uint64_t>((g + 1.0) * 100));
        const int n = 200000, bins = 20;
        std::vector<int> hist(bins, 0);
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mu = hg_sample_cos(g, rng.uniform());
            sum += mu;
            sum2 += mu * mu;
            ++hist[std::min(bins - 1, static_cast<int>((mu + 1.0) * 0.5 * bins))];
        }
        const double mean = sum / n;
        const double se = std::sqrt((sum2 / n - mean * mean) / n);
        CHECK(std::abs(mean - g) <= 4.0 * se);

        // Chi-square against bin probabilities from the CDF; 19 dof, p = 1e-4 cut.
        double chi2 = 0.0;
        for (int b = 0; b < bins; ++b) {
            const double lo = -1.0 + 2.0 * b / bins, hi = -1.0 + 2.0 * (b + 1) / bins;
            const double expected = n * (hg_cdf(hi, g) - hg_cdf(lo, g));
            chi2 += sqr(hist[b] - expected) / expected;
        }
        CHECK(chi2 < 50.0);
    }
}

TEST_CASE("sampled directions are unit vectors around the incoming direction") {
    Pcg32 rng(5);
    const Vec3 in = Vec3(0.3, -0.4, 0.8).normalized();
    double mean_cos = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const Vec3 d = hg_sample(in, 0.6, rng.uniform(), rng.uniform());
        CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
        mean_cos += d.dot(in);
    }
    CHECK(mean_cos / n == doctest::Approx(0.6).epsilon(0.02));
}

TEST_CASE("free-flight distances are exponential") {
    Pcg32 rng(77);
    const double sigma = 60.0;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_free_flight(sigma, rng.uniform());
    const double mean = sum / n;
    // Standard error of an exponential mean is mean / sqrt(n).
    CHECK(std::abs(mean - 1.0 / sigma) <= 4.0 / sigma / std::sqrt(n));
    CHECK(transmittance(sigma, 1.0 / sigma) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("depolarizer keeps intensity only") {
    const StokesVector s(2.0, 0.5, -1.0);
    const StokesVector d = depolarizer() * s;
    CHECK(d == StokesVector(2.0, 0.0, 0.0));
    CHECK(depolarize(s) == d);
}

TEST_CASE("refusals and validation") {
    CHECK_THROWS_AS(hg_eval(0.5, 1.0), RefusalError);
    CHECK_THROWS_AS(hg_eval(0.5, -1.2), RefusalError);
    MediumParams m;
    CHECK_NOTHROW(m.validate());
    m.g = 1.0;
    CHECK_THROWS_AS(m.validate(), InputError);
    m = {};
    m.albedo[1] = 1.5;
    CHECK_THROWS_AS(m.validate(), InputError);
    m = {};
    m.sigma_t[2] = 0.0;
    CHECK_THROWS_AS(m.validate(), InputError);
}

}  // TEST_SUITE
