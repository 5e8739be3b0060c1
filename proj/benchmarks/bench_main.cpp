// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/fresnel.h"
#include "polsss/medium.h"
#include "polsss/pfm.h"
#include "polsss/renderer.h"
#include "polsss/rng.h"
#include "polsss/scene.h"

#include <benchmark/benchmark.h>

namespace {

using namespace polsss;

void BM_Fresnel(benchmark::State &state) {
    double c = 0.0;
    for (auto _ : state) {
        c += 1e-6;
        if (c > 1.0) c = 0.0;
        benchmark::DoNotOptimize(reflect_mueller(c, kDefaultEta));
    }
}
BENCHMARK(BM_Fresnel);

void BM_HgSample(benchmark::State &state) {
    Pcg32 rng(1);
    const Vec3 d(0.0, 0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(hg_sample(d, 0.5, rng.uniform(), rng.uniform()));
}
BENCHMARK(BM_HgSample);

void BM_SphereIntersect(benchmark::State &state) {
    const Sphere sphere(0.05);
    Pcg32 rng(2);
    for (auto _ : state) {
        const Vec3 target(0.1 * (rng.uniform() - 0.5), 0.1 * (rng.uniform() - 0.5), 0.0);
        const Vec3 o(0.0, 0.0, 0.3);
        benchmark::DoNotOptimize(sphere.intersect({o, (target - o).normalized()}));
    }
}
BENCHMARK(BM_SphereIntersect);

void BM_MeshIntersect(benchmark::State &state) {
    const TriangleMesh mesh(make_icosphere(static_cast<int>(state.range(0)), 0.05));
    Pcg32 rng(3);
    for (auto _ : state) {
        const Vec3 target(0.1 * (rng.uniform() - 0.5), 0.1 * (rng.uniform() - 0.5), 0.0);
        const Vec3 o(0.0, 0.0, 0.3);
        benchmark::DoNotOptimize(mesh.intersect({o, (target - o).normalized()}));
    }
    state.SetLabel(std::to_string(mesh.mesh().triangles.size()) + " triangles");
}
BENCHMARK(BM_MeshIntersect)->Arg(2)->Arg(4);

void BM_SuperquadricIntersect(benchmark::State &state) {
    const Superquadric sq(Vec3(0.05, 0.04, 0.03), 0.5, 1.5);
    Pcg32 rng(4);
    for (auto _ : state) {
        const Vec3 target(0.1 * (rng.uniform() - 0.5), 0.1 * (rng.uniform() - 0.5), 0.0);
        const Vec3 o(0.0, 0.0, 0.3);
        benchmark::DoNotOptimize(sq.intersect({o, (target - o).normalized()}));
    }
}
BENCHMARK(BM_SuperquadricIntersect);

void BM_RenderCanonical(benchmark::State &state) {
    const Scene scene = canonical_scene(64);
    RenderConfig cfg;
    cfg.spp = static_cast<int>(state.range(0));
    cfg.threads = 1;
    uint64_t paths = 0;
    for (auto _ : state) {
        const StokesRender r = render_stokes(scene, cfg);
        paths += r.stats.paths;
        benchmark::DoNotOptimize(r.mean.s[0].data().data());
    }
    state.counters["paths/s"] = benchmark::Counter(static_cast<double>(paths), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RenderCanonical)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PfmEncode(benchmark::State &state) {
    ImageF img(128, 128, 0.5f);
    for (auto _ : state) benchmark::DoNotOptimize(encode_pfm(img));
}
BENCHMARK(BM_PfmEncode);

}  // namespace

BENCHMARK_MAIN();
