// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/renderer.h"

#include "polsss/errors.h"
#include "polsss/fresnel.h"
#include "polsss/medium.h"
#include "polsss/rng.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace polsss {

std::string to_string(RenderMode m) {
    switch (m) {
        case RenderMode::Full: return "full";
        case RenderMode::PureBsdf: return "pure_bsdf";
        case RenderMode::SssOnly: return "sss_only";
        case RenderMode::Unpolarized: return "unpolarized";
    }
    return "full";
}

RenderMode render_mode_from_string(const std::string &s) {
    if (s == "full") return RenderMode::Full;
    if (s == "pure_bsdf") return RenderMode::PureBsdf;
    if (s == "sss_only") return RenderMode::SssOnly;
    if (s == "unpolarized") return RenderMode::Unpolarized;
    throw InputError("unknown render mode '" + s + "'");
}

void RenderConfig::validate() const {
    if (spp < 1) throw InputError("spp must be >= 1");
    if (max_bounces < 1) throw InputError("max_bounces must be >= 1");
    if (width < 0 || height < 0) throw InputError("resolution must be non-negative");
}

int default_thread_count() {
    if (const char *env = std::getenv("POLSSS_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct PathSample {
    Vec3 stokes = Vec3::Zero();
    bool contributed = false;
    bool medium = false;
    bool leaked = false;
    bool truncated = false;
};

/// Reference axis for a Stokes frame of a beam travelling along `k`, derived from
/// a preferred axis and projected to be perpendicular to `k`.
Vec3 perpendicular_axis(const Vec3 &k, const Vec3 &preferred) {
    Vec3 a = preferred - preferred.dot(k) * k;
    const double len = a.norm();
    if (len < 1e-12) return any_perpendicular(k);
    return a / len;
}

/// s-direction of an interface event: perpendicular to the plane of incidence.
Vec3 s_axis(const Vec3 &k_in, const Vec3 &n, const Vec3 &fallback_k) {
    Vec3 s = k_in.cross(n);
    const double len = s.norm();
    if (len < 1e-12) return any_perpendicular(fallback_k);
    return s / len;
}

bool hit_flash(const FlashLight &flash, const Ray &ray, double t_max) {
    const Vec3 oc = ray.o - flash.center;
    const double b = oc.dot(ray.d);
    const double c = oc.squaredNorm() - flash.radius * flash.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return false;
    const double sq = std::sqrt(disc);
    double t = -b - sq;
    if (t <= 0.0) t = -b + sq;
    return t > 0.0 && t < t_max;
}

class PathTracer {
  public:
    PathTracer(const Scene &scene, const RenderConfig &config)
        : scene_(scene), cfg_(config), shape_(*scene.shape),
          eta_(config.furnace_test ? 1.0 : scene.interface.eta),
          eps_(1e-9 * std::max(1e-3, scene.shape->scale())),
          polarized_(config.mode != RenderMode::Unpolarized) {}

    PathSample trace(int px, int py, int sample, int channel) const {
        Pcg32 rng(hash_values({cfg_.seed, static_cast<uint64_t>(px), static_cast<uint64_t>(py),
                               static_cast<uint64_t>(sample), static_cast<uint64_t>(channel)}));
        const Camera &cam = scene_.camera;
        const double jx = rng.uniform(), jy = rng.uniform();
        Ray ray = cam.generate_ray(px + jx, py + jy);
        Vec3 frame = perpendicular_axis(-ray.d, cam.right());
        Mat3 T = Mat3::Identity();
        PathSample out;
        int bounces = 0;
        const double sigma = scene_.medium.sigma_t[channel];
        const double albedo = scene_.medium.albedo[channel];
        const double g = scene_.medium.g;

        for (;;) {
            // Outside the object.
            auto hit = shape_.intersect(ray, std::numeric_limits<double>::infinity(), 0.0);
            const double t_obj = hit ? hit->t : std::numeric_limits<double>::infinity();
            if (scene_.has_flash && hit_flash(scene_.flash, ray, t_obj)) {
                add_light(out, T, scene_.flash.intensity);
                return out;
            }
            if (!hit) {
                const double l = cfg_.clamp_env ? scene_.env.eval(ray.d, channel)
                                                : scene_.env.eval_unclamped(ray.d, channel);
                add_light(out, T, l);
                return out;
            }
            if (hit->inside) {
                out.leaked = true;
                return out;
            }
            if (bounces >= cfg_.max_bounces) {
                out.truncated = true;
                return out;
            }
            ++bounces;
            const Vec3 n = hit->n;
            const Vec3 k_out = -ray.d;
            const double cos_i = std::clamp(-ray.d.dot(n), 0.0, 1.0);
            const FresnelCoeffs fc = fresnel(cos_i, eta_);
            const double r = fc.reflectance();
            if (rng.uniform() < r) {
                const Vec3 d_new = reflect(ray.d, n).normalized();
                const Vec3 s = s_axis(-d_new, n, k_out);
                T = T * interface_matrix(k_out, s, frame, reflect_mueller(fc)) / r;
                frame = s;
                ray = Ray{hit->p + eps_ * n, d_new};
                continue;
            }
            // Refraction into the medium (light leaving it towards the camera).
            if (cfg_.mode == RenderMode::PureBsdf) return out;
            Vec3 d_in;
            if (!refract(ray.d, n, eta_, d_in)) return out;  // unreachable from the rare side
            const Vec3 s = s_axis(-d_in, n, k_out);
            T = T * interface_matrix(k_out, s, frame, refract_mueller(fc)) / (1.0 - r);
            T.col(1).setZero();  // depolarizer
            T.col(2).setZero();
            out.medium = true;

            // Scalar random walk inside.
            Vec3 p = hit->p - eps_ * n;
            Vec3 d = d_in;
            bool scattered = false;
            bool left = false;
            while (!left) {
                const double dist = sample_free_flight(sigma, rng.uniform());
                std::optional<Hit> exit;
                if (shape_.convex() && shape_.contains(p + dist * d)) {
                    exit.reset();
                } else {
                    exit = shape_.intersect(Ray{p, d}, dist, 0.0);
                    if (!exit && shape_.convex()) {
                        out.leaked = true;
                        return out;
                    }
                }
                if (!exit) {
                    p += dist * d;
                    if (bounces >= cfg_.max_bounces) {
                        out.truncated = true;
                        return out;
                    }
                    ++bounces;
                    scattered = true;
                    T *= albedo;
                    if (T.isZero(0.0)) return out;
                    if (bounces > kRouletteStartBounce) {
                        const double q = std::clamp(std::abs(T(0, 0)), kRouletteMinSurvival, kRouletteMaxSurvival);
                        if (rng.uniform() >= q) return out;
                        T /= q;
                    }
                    const double u1 = rng.uniform(), u2 = rng.uniform();
                    d = hg_sample(d, g, u1, u2);
                    continue;
                }
                // Boundary reached from inside.
                if (!scattered) return out;  // unscattered transmission is not subsurface transport
                if (!exit->inside) {
                    out.leaked = true;
                    return out;
                }
                if (bounces >= cfg_.max_bounces) {
                    out.truncated = true;
                    return out;
                }
                ++bounces;
                const Vec3 no = exit->n;
                const double cos_int = std::clamp(d.dot(no), 0.0, 1.0);
                const FresnelCoeffs fi = fresnel(cos_int, 1.0 / eta_);
                const double ri = fi.reflectance();
                if (fi.tir || rng.uniform() < ri) {
                    d = reflect(d, no).normalized();
                    p = exit->p - eps_ * no;
                    continue;
                }
                Vec3 d_out;
                if (!refract(d, -no, 1.0 / eta_, d_out)) {
                    d = reflect(d, no).normalized();
                    p = exit->p - eps_ * no;
                    continue;
                }
                // Light entering from outside along -d_out; after the depolarizer only
                // the first row of the transmission matrix matters, so no frame change.
                const Vec3 s_new = s_axis(-d_out, no, -d);
                const FresnelCoeffs fo = fresnel(std::clamp(d_out.dot(no), 0.0, 1.0), eta_);
                T = T * mueller(refract_mueller(fo)) / (1.0 - ri);
                frame = s_new;
                ray = Ray{exit->p + eps_ * no, d_out};
                left = true;
            }
        }
    }

  private:
    Mat3 mueller(const MuellerMatrix &m) const {
        if (polarized_) return m.m;
        Mat3 s = Mat3::Zero();
        s(0, 0) = m.m(0, 0);
        return s;
    }

    /// Conversion from the interface frame (reference axis `s`) into the current
    /// frame of the outgoing beam, followed by the interface matrix.
    Mat3 interface_matrix(const Vec3 &k_out, const Vec3 &s, const Vec3 &frame, const MuellerMatrix &m) const {
        if (!polarized_) return mueller(m);
        return change_of_frame(k_out, s, frame).m * m.m;
    }

    void add_light(PathSample &out, const Mat3 &T, double radiance) const {
        if (radiance == 0.0) return;
        if (cfg_.mode == RenderMode::SssOnly && !out.medium) return;
        out.stokes = T.col(0) * radiance;
        out.contributed = true;
    }

    const Scene &scene_;
    const RenderConfig &cfg_;
    const Shape &shape_;
    double eta_;
    double eps_;
    bool polarized_;
};

}  // namespace

StokesRender render_stokes(const Scene &scene, const RenderConfig &config) {
    config.validate();
    if (!scene.shape) throw InputError("scene has no shape; call finalize()");
    Scene local = scene;
    if (config.width > 0 && config.height > 0) {
        local.camera.width = config.width;
        local.camera.height = config.height;
    }
    const int w = local.camera.width, h = local.camera.height;
    if (config.pixel_mask && (config.pixel_mask->width() != w || config.pixel_mask->height() != h))
        throw InputError("pixel mask does not match the render resolution");

    const auto start = std::chrono::steady_clock::now();
    StokesRender out{StokesImage(w, h), StokesImage(w, h), {}};
    const PathTracer tracer(local, config);

    constexpr int kTile = 16;
    const int tiles_x = (w + kTile - 1) / kTile, tiles_y = (h + kTile - 1) / kTile;
    const int tile_count = tiles_x * tiles_y;
    std::atomic<int> next_tile{0};
    std::atomic<int> done_tiles{0};
    std::atomic<uint64_t> paths{0}, medium_paths{0}, leaked{0}, truncated{0};
    std::mutex progress_mutex;
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        try {
            for (int tile; (tile = next_tile.fetch_add(1)) < tile_count;) {
                const int x0 = (tile % tiles_x) * kTile, y0 = (tile / tiles_x) * kTile;
                uint64_t local_paths = 0, local_medium = 0, local_leaked = 0, local_trunc = 0;
                for (int y = y0; y < std::min(y0 + kTile, h); ++y) {
                    for (int x = x0; x < std::min(x0 + kTile, w); ++x) {
                        const size_t pixel = static_cast<size_t>(y) * w + x;
                        if (config.pixel_mask && !(*config.pixel_mask)[pixel]) continue;
                        for (int c = 0; c < 3; ++c) {
                            Vec3 sum = Vec3::Zero(), sum2 = Vec3::Zero();
                            for (int s = 0; s < config.spp; ++s) {
                                const PathSample ps = tracer.trace(x, y, s, c);
                                ++local_paths;
                                local_medium += ps.medium;
                                local_leaked += ps.leaked;
                                local_trunc += ps.truncated;
                                if (!ps.contributed) continue;
                                sum += ps.stokes;
                                sum2 += ps.stokes.cwiseProduct(ps.stokes);
                            }
                            const double n = config.spp;
                            const Vec3 mean = sum / n;
                            Vec3 var = Vec3::Zero();
                            if (config.spp > 1)
                                var = ((sum2 - sum.cwiseProduct(sum) / n) / (n - 1.0) / n).cwiseMax(0.0);
                            out.mean.set(pixel, c, StokesVector(mean));
                            out.variance.set(pixel, c, StokesVector(var));
                        }
                    }
                }
                paths += local_paths;
                medium_paths += local_medium;
                leaked += local_leaked;
                truncated += local_trunc;
                const int done = ++done_tiles;
                if (config.progress) {
                    std::lock_guard lock(progress_mutex);
                    config.progress(static_cast<double>(done) / tile_count);
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next_tile.store(tile_count);
        }
    };

    const int threads = std::max(1, std::min(config.threads > 0 ? config.threads : default_thread_count(), tile_count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    out.stats.paths = paths;
    out.stats.medium_paths = medium_paths;
    out.stats.leaked_paths = leaked;
    out.stats.truncated_paths = truncated;
    out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

RenderOutputs render(const Scene &scene, const RenderConfig &config) {
    StokesRender sr = render_stokes(scene, config);
    Scene local = scene;
    if (config.width > 0 && config.height > 0) {
        local.camera.width = config.width;
        local.camera.height = config.height;
    }
    RenderOutputs out;
    out.gt = gt_maps(local);
    out.captures = capture_images(sr.mean);
    out.polarimetric = polarimetric_maps(sr.mean, out.gt.mask);
    out.stokes = std::move(sr.mean);
    out.variance = std::move(sr.variance);
    out.stats = sr.stats;
    if (config.with_pure_bsdf && config.mode != RenderMode::PureBsdf) {
        RenderConfig pc = config;
        pc.mode = RenderMode::PureBsdf;
        pc.with_pure_bsdf = false;
        out.pure_bsdf_captures = capture_images(render_stokes(scene, pc).mean);
    }
    return out;
}

double aop_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi);
    return std::min(d, kPi - d);
}

PolarimetricSummary polarimetric_summary(const PolarimetricMaps &maps, const Mask &mask) {
    if (mask.count() == 0) throw RefusalError("polarimetric_summary: empty mask");
    if (mask.width() != maps.dop.width() || mask.height() != maps.dop.height())
        throw InputError("polarimetric_summary: mask does not match the maps");
    PolarimetricSummary s;
    s.dop_histogram.assign(20, 0.0);
    s.aop_histogram.assign(180, 0.0);
    double dop_sum = 0.0;
    size_t n = 0;
    for (size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        ++s.pixels;
        for (int c = 0; c < 3; ++c) {
            const double dop = maps.dop.at(p, c);
            dop_sum += dop;
            ++n;
            s.dop_histogram[std::min<size_t>(19, static_cast<size_t>(dop * 20.0))] += 1.0;
            const double polarized = maps.imax.at(p, c) - maps.imin.at(p, c);
            const size_t bin = std::min<size_t>(179, static_cast<size_t>(maps.aop.at(p, c) / kPi * 180.0));
            s.aop_histogram[bin] += polarized;
        }
    }
    s.mean_dop = dop_sum / static_cast<double>(n);
    for (auto &v : s.dop_histogram) v /= static_cast<double>(n);

    // Peak bin, refined by the doubled-angle circular mean of its neighbourhood.
    const size_t peak = static_cast<size_t>(
        std::max_element(s.aop_histogram.begin(), s.aop_histogram.end()) - s.aop_histogram.begin());
    double cx = 0.0, cy = 0.0;
    for (int k = -3; k <= 3; ++k) {
        const size_t b = (peak + 180 + k) % 180;
        const double angle = (b + 0.5) / 180.0 * kPi;
        cx += s.aop_histogram[b] * std::cos(2.0 * angle);
        cy += s.aop_histogram[b] * std::sin(2.0 * angle);
    }
    double mode = 0.5 * std::atan2(cy, cx);
    if (mode < 0.0) mode += kPi;
    s.aop_mode = mode;
    return s;
}

}  // namespace polsss
