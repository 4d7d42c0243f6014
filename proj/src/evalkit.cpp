#include "objnerf/evalkit.hpp"

#include <cmath>
#include <stdexcept>

#include "objnerf/threadpool.hpp"
#include "objnerf/volrender.hpp"

namespace objnerf {

namespace {

// exp(-13.8155...) = 1e-6: transmittance below this contributes nothing visible.
constexpr double kStopOpticalDepth = 13.815510557964274;
constexpr int kBlock = 16;

struct PixelResult {
    Vec3d color{0, 0, 0};
    double depth = 0;
    double opacity = 0;
    bool hit_box = false;
};

struct RowScratch {
    std::vector<double> ts;
    std::vector<Vec3f> positions, dirs;
    FieldCache<float> cache;
};

PixelResult shade_pixel(const FieldParams<float>& field, const CameraIntrinsics& intr,
                        const Pose& pose, int u, int v, const RenderOpts& opts,
                        RowScratch& scratch) {
    PixelResult out;
    Rayd ray = pixel_ray(intr, pose, u, v);
    auto clipped = clip_to_aabb(ray, field.aabb);
    if (!clipped) return out;
    out.hit_box = true;

    Rng unused(0);
    sample_ray_into(*clipped, opts.n_samples, unused, /*stratified=*/false, scratch.ts);
    Vec3f dir = clipped->dir.cast<float>();

    double log_t = 0, cr = 0, cg = 0, cb = 0, cd = 0;
    for (int base = 0; base < opts.n_samples; base += kBlock) {
        int n = std::min(kBlock, opts.n_samples - base);
        scratch.positions.resize(n);
        scratch.dirs.assign(n, dir);
        for (int i = 0; i < n; ++i)
            scratch.positions[i] = clipped->at(scratch.ts[base + i]).cast<float>();
        field_forward(field, std::span<const Vec3f>(scratch.positions),
                      std::span<const Vec3f>(scratch.dirs), scratch.cache);
        for (int i = 0; i < n; ++i) {
            double delta = scratch.ts[base + i + 1] - scratch.ts[base + i];
            double a = double(scratch.cache.sigma[i]) * delta;
            double w = std::exp(-log_t) * (1.0 - std::exp(-a));
            log_t += a;
            cr += w * scratch.cache.color[size_t(i) * 3 + 0];
            cg += w * scratch.cache.color[size_t(i) * 3 + 1];
            cb += w * scratch.cache.color[size_t(i) * 3 + 2];
            cd += w * scratch.ts[base + i];
        }
        if (opts.early_termination && log_t > kStopOpticalDepth) break;
    }
    out.color = {cr, cg, cb};
    out.depth = cd;
    out.opacity = 1.0 - std::exp(-log_t);
    return out;
}

} // namespace

RenderedView render_object_view(const FieldParams<float>& field, const Pose& pose,
                                const CameraIntrinsics& intr, const RenderOpts& opts) {
    intr.validate();
    if (opts.n_samples < 1) throw std::runtime_error("render: need at least one sample");
    RenderedView view;
    view.rgb = ImageU8(intr.width, intr.height, 3);
    view.depth = ImageF(intr.width, intr.height, 1);
    view.mask = ImageU8(intr.width, intr.height, 1);
    view.opacity = ImageF(intr.width, intr.height, 1);

    parallel_chunks(intr.height, 4, [&](int, int64_t y0, int64_t y1) {
        RowScratch scratch;
        for (int v = int(y0); v < int(y1); ++v)
            for (int u = 0; u < intr.width; ++u) {
                PixelResult px = shade_pixel(field, intr, pose, u, v, opts, scratch);
                for (int c = 0; c < 3; ++c)
                    view.rgb.at(u, v, c) =
                        uint8_t(std::lround(std::min(1.0, std::max(0.0, px.color[c])) * 255.0));
                view.opacity.at(u, v) = float(px.opacity);
                bool in_mask = px.opacity > opts.mask_threshold;
                view.mask.at(u, v) = in_mask ? 1 : 0;
                if (in_mask)
                    view.depth.at(u, v) =
                        float(opts.normalize_depth ? px.depth / px.opacity : px.depth);
            }
    });
    return view;
}

ViewMetrics compare_view(const ImageU8& rendered_mask, const ImageF& rendered_depth,
                         const ImageU8& ideal_mask, const ImageF& gt_depth) {
    if (!rendered_mask.same_shape(ideal_mask))
        throw std::runtime_error("compare_view: mask dimension mismatch");
    ViewMetrics m;
    for (size_t i = 0; i < rendered_mask.data.size(); ++i) {
        bool r = rendered_mask.data[i] != 0;
        bool g = ideal_mask.data[i] != 0;
        if (r || g) ++m.n_union;
        if (r && g) {
            ++m.n_intersection;
            float gt = gt_depth.data[i];
            if (gt > 0) {
                ++m.n_correct;
                m.abs_err_sum += std::abs(double(rendered_depth.data[i]) - double(gt));
            }
        }
    }
    return m;
}

MetricsRecord pool_metrics(std::vector<ViewMetrics> per_view) {
    MetricsRecord rec;
    int64_t inter = 0, uni = 0;
    double err = 0;
    for (const ViewMetrics& m : per_view) {
        inter += m.n_intersection;
        uni += m.n_union;
        rec.n_correct_pixels += m.n_correct;
        err += m.abs_err_sum;
    }
    rec.iou = uni == 0 ? 1.0 : double(inter) / double(uni);
    if (rec.n_correct_pixels > 0) rec.depth_mae = err / double(rec.n_correct_pixels);
    rec.per_view = std::move(per_view);
    return rec;
}

MetricsRecord evaluate(const FieldParams<float>& field, const std::vector<EvalView>& views,
                       const RenderOpts& opts) {
    if (views.empty()) throw std::runtime_error("evaluate: need at least one view");
    std::vector<ViewMetrics> per_view;
    per_view.reserve(views.size());
    for (const EvalView& view : views) {
        RenderedView r = render_object_view(field, view.pose, view.intrinsics, opts);
        per_view.push_back(compare_view(r.mask, r.depth, view.ideal_mask, view.gt_depth));
    }
    return pool_metrics(std::move(per_view));
}

std::vector<EvalView> eval_views_from_dataset(const SceneDataset& ds, int object_id) {
    if (!ds.find_object(object_id)) throw std::runtime_error("undeclared instance id");
    std::vector<EvalView> views;
    views.reserve(ds.frames.size());
    for (const Frame& f : ds.frames) {
        EvalView v;
        v.pose = f.pose;
        v.intrinsics = ds.intrinsics;
        v.ideal_mask = ImageU8(f.mask.width, f.mask.height, 1);
        v.gt_depth = ImageF(f.mask.width, f.mask.height, 1);
        for (size_t i = 0; i < f.mask.data.size(); ++i)
            if (f.mask.data[i] == object_id) {
                v.ideal_mask.data[i] = 1;
                v.gt_depth.data[i] = f.depth.data[i];
            }
        views.push_back(std::move(v));
    }
    return views;
}

} // namespace objnerf
