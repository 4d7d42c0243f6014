#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "objnerf/camera.hpp"
#include "objnerf/pose.hpp"
#include "objnerf/rng.hpp"
#include "objnerf/vec3.hpp"

namespace objnerf {

// Cameras cannot sample geometry closer than this (meters).
inline constexpr double kNearLimit = 0.01;

template <typename S>
struct Ray {
    Vec3<S> origin;
    Vec3<S> dir; // unit length
    S t_near = 0;
    S t_far = 0;

    Vec3<S> at(S t) const { return origin + dir * t; }

    template <typename U>
    Ray<U> cast() const {
        return {origin.template cast<U>(), dir.template cast<U>(), U(t_near), U(t_far)};
    }
};

using Rayd = Ray<double>;
using Rayf = Ray<float>;

// Ray through the center of pixel (u, v); pixel centers at integer + 0.5.
// Camera convention: x right, y down, z forward (optical axis).
inline Rayd pixel_ray(const CameraIntrinsics& intr, const Pose& pose, double u, double v) {
    Vec3d d_cam{(u + 0.5 - intr.cx) / intr.fx, (v + 0.5 - intr.cy) / intr.fy, 1.0};
    Rayd r;
    r.origin = pose.translation;
    r.dir = pose.rotation.rotate(normalized(d_cam));
    r.t_near = 0;
    r.t_far = std::numeric_limits<double>::infinity();
    return r;
}

// Slab intersection. On a hit, t_near = max(entry, kNearLimit) and
// t_far = exit; misses (including boxes entirely behind the near limit)
// return nullopt.
template <typename S>
std::optional<Ray<S>> clip_to_aabb(Ray<S> ray, const Box3<S>& box) {
    S t0 = S(0), t1 = std::numeric_limits<S>::max();
    for (int a = 0; a < 3; ++a) {
        S o = ray.origin[a], d = ray.dir[a];
        if (std::abs(d) < S(1e-12)) {
            if (o < box.min[a] || o > box.max[a]) return std::nullopt;
            continue;
        }
        S inv = S(1) / d;
        S ta = (box.min[a] - o) * inv;
        S tb = (box.max[a] - o) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    S entry = t0, exit = t1;
    S near = S(kNearLimit);
    if (exit <= std::max(entry, near)) return std::nullopt;
    ray.t_near = std::max(entry, near);
    ray.t_far = exit;
    return ray;
}

// n_samples+1 strictly increasing distances over [t_near, t_far]:
// one per equal stratum, either the stratum midpoint (deterministic) or a
// uniform draw inside it (stratified).
template <typename S>
void sample_ray_into(const Ray<S>& ray, int n_samples, Rng& rng, bool stratified,
                     std::vector<S>& out) {
    int n_points = n_samples + 1;
    out.resize(n_points);
    S span = ray.t_far - ray.t_near;
    S inv = span / S(n_points);
    for (int i = 0; i < n_points; ++i) {
        S frac = stratified ? S(rng.uniform()) : S(0.5);
        out[i] = ray.t_near + (S(i) + frac) * inv;
    }
}

template <typename S>
std::vector<S> sample_ray(const Ray<S>& ray, int n_samples, Rng& rng, bool stratified) {
    std::vector<S> ts;
    sample_ray_into(ray, n_samples, rng, stratified, ts);
    return ts;
}

template <typename S>
struct RenderResult {
    Vec3<S> color{0, 0, 0}; // expected ray color
    S depth = 0;            // expected travel distance
    S opacity = 0;          // 1 - final transmittance
};

template <typename S>
struct IntegrateCache {
    std::vector<S> weights;
    S t_final = 1;
};

// Quadrature over the N left endpoints of ts (which holds N+1 points):
//   w_i = T_i (1 - exp(-sigma_i * delta_i)),  T_i = exp(-sum_{j<i} sigma_j delta_j)
// color = sum w_i c_i, depth = sum w_i t_i, opacity = 1 - T_N.
// sum w_i + T_N telescopes to 1.
template <typename S>
RenderResult<S> integrate(std::span<const S> sigmas, std::span<const Vec3<S>> colors,
                          std::span<const S> ts, IntegrateCache<S>* cache = nullptr) {
    size_t n = sigmas.size();
    RenderResult<S> out;
    if (cache) {
        cache->weights.resize(n);
        cache->t_final = 1;
    }
    double log_t = 0; // accumulated optical depth (64-bit)
    double cr = 0, cg = 0, cb = 0, cd = 0;
    for (size_t i = 0; i < n; ++i) {
        S delta = ts[i + 1] - ts[i];
        S a = sigmas[i] * delta;
        S trans = S(std::exp(-log_t));
        S w = trans * (S(1) - std::exp(-a));
        log_t += double(a);
        if (cache) cache->weights[i] = w;
        cr += double(w) * double(colors[i].x);
        cg += double(w) * double(colors[i].y);
        cb += double(w) * double(colors[i].z);
        cd += double(w) * double(ts[i]);
    }
    S t_final = S(std::exp(-log_t));
    if (cache) cache->t_final = t_final;
    out.color = {S(cr), S(cg), S(cb)};
    out.depth = S(cd);
    out.opacity = S(1) - t_final;
    return out;
}

// Exact reverse pass of integrate. Upstream gradients: g_color (3), g_depth,
// g_opacity. Outputs may be empty spans when a gradient is not needed.
template <typename S>
void integrate_backward(const Vec3<S>& g_color, S g_depth, S g_opacity,
                        std::span<const S> sigmas, std::span<const Vec3<S>> colors,
                        std::span<const S> ts, const IntegrateCache<S>& cache,
                        std::span<S> d_sigmas, std::span<S> d_colors3,
                        std::span<S> d_ts) {
    size_t n = sigmas.size();
    // suffix[i] = sum_{j>=i} q_j w_j with q_j = g_color . c_j + g_depth * t_j
    std::vector<double> suffix(n + 1, 0.0);
    for (size_t i = n; i-- > 0;) {
        double q = double(g_color.x) * colors[i].x + double(g_color.y) * colors[i].y +
                   double(g_color.z) * colors[i].z + double(g_depth) * ts[i];
        suffix[i] = suffix[i + 1] + q * double(cache.weights[i]);
    }

    if (!d_ts.empty())
        for (size_t i = 0; i < n + 1; ++i) d_ts[i] = 0;

    double log_t = 0;
    for (size_t i = 0; i < n; ++i) {
        S delta = ts[i + 1] - ts[i];
        S a = sigmas[i] * delta;
        S trans = S(std::exp(-log_t));
        log_t += double(a);
        double q = double(g_color.x) * colors[i].x + double(g_color.y) * colors[i].y +
                   double(g_color.z) * colors[i].z + double(g_depth) * ts[i];
        // dL/da_i: own-weight term, all later weights, and the final transmittance
        double da = q * double(trans) * std::exp(-double(a)) - suffix[i + 1] +
                    double(g_opacity) * double(cache.t_final);
        if (!d_sigmas.empty()) d_sigmas[i] = S(da * double(delta));
        if (!d_colors3.empty()) {
            d_colors3[i * 3 + 0] = g_color.x * cache.weights[i];
            d_colors3[i * 3 + 1] = g_color.y * cache.weights[i];
            d_colors3[i * 3 + 2] = g_color.z * cache.weights[i];
        }
        if (!d_ts.empty()) {
            double dd = da * double(sigmas[i]); // dL/ddelta_i
            d_ts[i] += S(double(g_depth) * double(cache.weights[i]) - dd);
            d_ts[i + 1] += S(dd);
        }
    }
}

} // namespace objnerf
