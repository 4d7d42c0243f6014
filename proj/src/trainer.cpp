#include "objnerf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace objnerf {

Vec3d rgb_residual(RayClass cls, const Vec3d& rendered, double opacity, const Vec3d& gt_color,
                   Rng& rng) {
    if (cls == RayClass::Masked) return {0, 0, 0};
    Vec3d bg{rng.uniform(), rng.uniform(), rng.uniform()};
    Vec3d target = cls == RayClass::Positive ? gt_color : bg;
    return rendered + bg * (1.0 - opacity) - target;
}

double depth_residual(RayClass cls, double rendered_depth, double t_final, double gt_depth) {
    if (cls != RayClass::Positive || t_final >= kTransmittanceGate || gt_depth <= 0) return 0;
    return std::abs(rendered_depth - gt_depth);
}

void assemble_batch(const SceneDataset& ds, const ObjectSpec& target, const RayIndex& index,
                    const TrainConfig& cfg, std::span<const Pose> poses, Rng& rng,
                    RayBatch& batch) {
    batch.clear();
    batch.n_samples = cfg.n_samples_per_ray;
    size_t n_pos = index.positives.size(), n_neg = index.negatives.size();
    if (n_pos + n_neg == 0) throw std::runtime_error("no trainable rays");
    const CameraIntrinsics& intr = ds.intrinsics;
    Box3d box = target.aabb();
    std::vector<double> ts_tmp;

    for (int k = 0; k < cfg.rays_per_batch; ++k) {
        const ClassifiedPixel* px;
        if (cfg.neg_ratio < 0) {
            size_t i = rng.uniform_int(n_pos + n_neg);
            px = i < n_pos ? &index.positives[i] : &index.negatives[i - n_pos];
        } else {
            bool neg = rng.uniform() < cfg.neg_ratio / (1.0 + cfg.neg_ratio);
            if (neg ? n_neg == 0 : n_pos == 0) neg = !neg;
            px = neg ? &index.negatives[rng.uniform_int(n_neg)]
                     : &index.positives[rng.uniform_int(n_pos)];
        }

        Vec3f bg{float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
        Vec3f tc = bg; // negatives chase the moving background
        float gtd = 0;
        uint8_t gate = 0;
        if (px->cls == RayClass::Positive) {
            tc = px->gt_color;
            gtd = px->gt_depth;
            gate = gtd > 0 ? 1 : 0;
        }

        Vec3d d_cam = normalized(
            Vec3d{(px->u + 0.5 - intr.cx) / intr.fx, (px->v + 0.5 - intr.cy) / intr.fy, 1.0});
        const Pose& pose = poses[px->frame];
        Rayd ray{pose.translation, pose.rotation.rotate(d_cam), 0, 0};
        auto clipped = clip_to_aabb(ray, box);

        batch.frame.push_back(px->frame);
        batch.d_cam.push_back(d_cam);
        batch.target_color.push_back(tc);
        batch.bg_color.push_back(bg);
        batch.gt_depth.push_back(gtd);
        batch.depth_gate.push_back(gate);
        size_t off = batch.ts.size();
        batch.ts.resize(off + size_t(cfg.n_samples_per_ray) + 1, 0.0);
        if (clipped) {
            batch.valid.push_back(1);
            sample_ray_into(*clipped, cfg.n_samples_per_ray, rng, cfg.stratified, ts_tmp);
            std::copy(ts_tmp.begin(), ts_tmp.end(), batch.ts.begin() + off);
        } else {
            batch.valid.push_back(0); // pose drifted the ray off the box
        }
    }
}

namespace {

// Optical depth past which the remaining samples are skipped (T < 1e-6).
constexpr double kTerminationDepth = 13.815510557964274;
constexpr int kEvalBlock = 16;

// Per-chunk gradient accumulation. Grid gradients go into a dense buffer so
// the hot path is a single scattered add and the merge is a contiguous sweep;
// chunks are merged in fixed order, which keeps the result independent of the
// thread count.
template <typename S>
struct GradPacket {
    std::vector<S> grid; // dense, mlp_offset() entries
    std::vector<S> mlp;
    std::vector<Vec3d> d_omega, d_tau;
    double loss_rgb = 0, loss_depth = 0;
};

// Copy src's sample rows [0, src.n) into dst at row offset.
template <typename S>
void append_cache(FieldCache<S>& dst, int offset, const FieldCache<S>& src,
                  const HashGridConfig& cfg) {
    auto cp = [&](std::vector<S>& d, const std::vector<S>& s, int stride) {
        std::copy(s.begin(), s.begin() + size_t(src.n) * stride,
                  d.begin() + size_t(offset) * stride);
    };
    cp(dst.feats, src.feats, cfg.feature_dim());
    cp(dst.h1, src.h1, cfg.hidden_width);
    cp(dst.draw, src.draw, cfg.density_out());
    cp(dst.sh, src.sh, cfg.sh_dim());
    cp(dst.g1, src.g1, cfg.hidden_width);
    cp(dst.g2, src.g2, cfg.hidden_width);
    cp(dst.craw, src.craw, 3);
    cp(dst.sigma, src.sigma, 1);
    cp(dst.color, src.color, 3);
}

template <typename S>
struct RayScratch {
    std::vector<Vec3<S>> positions, dirs, colors, d_positions, d_dirs;
    std::vector<S> ts, d_sigmas, d_colors3;
    FieldCache<S> cache, block_cache;
    IntegrateCache<S> icache;
};

// Forward (and optionally backward) of one ray. Returns loss contributions
// scaled by opts.loss_scale.
template <typename S, bool kBackward>
void eval_ray(const FieldParams<S>& fp, std::span<const Pose> poses, const RayBatch& batch,
              size_t r, const BatchEvalOptions& opts, GradPacket<S>* pk, RayScratch<S>& sc) {
    if (!batch.valid[r]) return;
    int ns = batch.n_samples;
    const double* ts = batch.ts.data() + r * size_t(ns + 1);
    const Pose& pose = poses[batch.frame[r]];
    Vec3d o = pose.translation;
    Vec3d d = pose.rotation.rotate(batch.d_cam[r]);

    sc.positions.resize(ns);
    sc.dirs.resize(ns);
    for (int i = 0; i < ns; ++i) {
        sc.positions[i] = (o + d * ts[i]).template cast<S>();
        sc.dirs[i] = d.cast<S>();
    }

    int used = 0;
    if (opts.early_termination) {
        sc.cache.resize(ns, fp.cfg);
        double optical = 0;
        while (used < ns) {
            int b = std::min(kEvalBlock, ns - used);
            field_forward<S>(fp, std::span<const Vec3<S>>(sc.positions).subspan(used, b),
                             std::span<const Vec3<S>>(sc.dirs).subspan(used, b), sc.block_cache);
            append_cache(sc.cache, used, sc.block_cache, fp.cfg);
            for (int i = used; i < used + b; ++i)
                optical += double(sc.cache.sigma[i]) * (ts[i + 1] - ts[i]);
            used += b;
            if (optical > kTerminationDepth) break;
        }
    } else {
        field_forward<S>(fp, sc.positions, sc.dirs, sc.cache);
        used = ns;
    }

    sc.ts.resize(used + 1);
    for (int i = 0; i <= used; ++i) sc.ts[i] = S(ts[i]);
    sc.colors.resize(used);
    for (int i = 0; i < used; ++i)
        sc.colors[i] = {sc.cache.color[i * 3 + 0], sc.cache.color[i * 3 + 1],
                        sc.cache.color[i * 3 + 2]};
    std::span<const S> sigmas(sc.cache.sigma.data(), used);

    RenderResult<S> res = integrate<S>(sigmas, sc.colors, sc.ts, &sc.icache);

    // Composite the fresh per-step random background behind the rendering.
    // Positives (target = pixel color) are pushed to full opacity; negatives
    // (target = the background itself) are pushed to empty space.
    Vec3<S> tcol = batch.target_color[r].cast<S>();
    Vec3<S> bg = batch.bg_color[r].cast<S>();
    Vec3<S> e = res.color + bg * (S(1) - res.opacity) - tcol;
    double r_norm = std::sqrt(double(dot(e, e)));
    pk->loss_rgb += opts.loss_scale * r_norm;
    Vec3<S> g_color{0, 0, 0};
    S g_opacity = 0;
    if (r_norm > 1e-12) {
        g_color = e * S(opts.loss_scale / r_norm);
        g_opacity = -dot(g_color, bg);
    }

    S g_depth = 0;
    if (opts.use_depth && batch.depth_gate[r] && double(sc.icache.t_final) < kTransmittanceGate) {
        double ed = double(res.depth) - double(batch.gt_depth[r]);
        pk->loss_depth += opts.loss_scale * std::abs(ed);
        if (ed != 0) g_depth = S(opts.loss_scale * opts.w_depth * (ed > 0 ? 1.0 : -1.0));
    }

    if constexpr (!kBackward) return;

    sc.d_sigmas.resize(used);
    sc.d_colors3.resize(size_t(used) * 3);
    integrate_backward<S>(g_color, g_depth, g_opacity, sigmas, sc.colors, sc.ts, sc.icache,
                          sc.d_sigmas, sc.d_colors3, {});

    std::span<Vec3<S>> d_pos_span, d_dir_span;
    if (opts.want_pose_grads) {
        sc.d_positions.assign(used, Vec3<S>{0, 0, 0});
        sc.d_dirs.assign(used, Vec3<S>{0, 0, 0});
        d_pos_span = sc.d_positions;
        d_dir_span = sc.d_dirs;
    }
    S* grid = pk->grid.data();
    field_backward<S>(
        fp, std::span<const Vec3<S>>(sc.positions.data(), used),
        std::span<const Vec3<S>>(sc.dirs.data(), used), sc.cache, sc.d_sigmas, sc.d_colors3,
        [grid](uint32_t idx, S val) { grid[idx] += val; }, pk->mlp, d_pos_span, d_dir_span);

    if (opts.want_pose_grads) {
        Vec3d g_o{0, 0, 0}, g_d{0, 0, 0};
        for (int i = 0; i < used; ++i) {
            Vec3d gp = sc.d_positions[i].template cast<double>();
            g_o += gp;
            g_d += gp * ts[i] + sc.d_dirs[i].template cast<double>();
        }
        // left-increment tangent: translation sees g_o directly, rotation
        // sees the moments of origin and direction
        pk->d_tau[batch.frame[r]] += g_o;
        pk->d_omega[batch.frame[r]] += cross(pose.translation, g_o) + cross(d, g_d);
    }
}

template <typename S, bool kBackward>
void run_batch(const FieldParams<S>& fp, std::span<const Pose> poses, const RayBatch& batch,
               const BatchEvalOptions& opts, BatchGrads<S>* out, double& loss_rgb,
               double& loss_depth) {
    size_t n_rays = batch.n_rays();
    // Cap the chunk count so the dense per-chunk grid buffers stay bounded.
    // The partition depends only on the ray count, never the thread count.
    int chunk = int(std::max<int64_t>({1, opts.chunk_rays, int64_t((n_rays + 15) / 16)}));
    size_t n_chunks = (n_rays + chunk - 1) / chunk;
    thread_local std::vector<GradPacket<S>> packet_pool;
    if (packet_pool.size() < n_chunks) packet_pool.resize(n_chunks);

    parallel_chunks(int64_t(n_rays), chunk, [&](int chunk_idx, int64_t begin, int64_t end) {
        GradPacket<S>& pk = packet_pool[chunk_idx];
        pk.loss_rgb = 0;
        pk.loss_depth = 0;
        thread_local RayScratch<S> sc;
        if (kBackward) {
            pk.grid.assign(fp.mlp_offset(), S(0));
            pk.mlp.assign(fp.mlp_count(), S(0));
            if (opts.want_pose_grads) {
                pk.d_omega.assign(poses.size(), Vec3d{0, 0, 0});
                pk.d_tau.assign(poses.size(), Vec3d{0, 0, 0});
            }
        }
        for (int64_t r = begin; r < end; ++r)
            eval_ray<S, kBackward>(fp, poses, batch, size_t(r), opts, &pk, sc);
    });

    loss_rgb = 0;
    loss_depth = 0;
    for (size_t c = 0; c < n_chunks; ++c) {
        const GradPacket<S>& pk = packet_pool[c];
        loss_rgb += pk.loss_rgb;
        loss_depth += pk.loss_depth;
        if (!kBackward) continue;
        S* field = out->field.data();
        size_t ng = pk.grid.size();
        for (size_t j = 0; j < ng; ++j) field[j] += pk.grid[j];
        S* mlp = field + fp.mlp_offset();
        for (size_t j = 0; j < pk.mlp.size(); ++j) mlp[j] += pk.mlp[j];
        if (opts.want_pose_grads)
            for (size_t f = 0; f < poses.size(); ++f) {
                out->d_omega[f] += pk.d_omega[f];
                out->d_tau[f] += pk.d_tau[f];
            }
    }
}

} // namespace

template <typename S>
void batch_forward_backward(const FieldParams<S>& fp, const CameraIntrinsics&,
                            std::span<const Pose> poses, const RayBatch& batch,
                            const BatchEvalOptions& opts, BatchGrads<S>& out) {
    out.field.assign(fp.param_count(), S(0));
    out.d_omega.assign(poses.size(), Vec3d{0, 0, 0});
    out.d_tau.assign(poses.size(), Vec3d{0, 0, 0});
    run_batch<S, true>(fp, poses, batch, opts, &out, out.loss_rgb, out.loss_depth);
}

template <typename S>
void batch_forward(const FieldParams<S>& fp, const CameraIntrinsics&, std::span<const Pose> poses,
                   const RayBatch& batch, const BatchEvalOptions& opts, double& loss_rgb,
                   double& loss_depth) {
    run_batch<S, false>(fp, poses, batch, opts, nullptr, loss_rgb, loss_depth);
}

template void batch_forward_backward<float>(const FieldParams<float>&, const CameraIntrinsics&,
                                            std::span<const Pose>, const RayBatch&,
                                            const BatchEvalOptions&, BatchGrads<float>&);
template void batch_forward_backward<double>(const FieldParams<double>&, const CameraIntrinsics&,
                                             std::span<const Pose>, const RayBatch&,
                                             const BatchEvalOptions&, BatchGrads<double>&);
template void batch_forward<float>(const FieldParams<float>&, const CameraIntrinsics&,
                                   std::span<const Pose>, const RayBatch&,
                                   const BatchEvalOptions&, double&, double&);
template void batch_forward<double>(const FieldParams<double>&, const CameraIntrinsics&,
                                    std::span<const Pose>, const RayBatch&,
                                    const BatchEvalOptions&, double&, double&);

TrainResult train(const SceneDataset& ds, const ObjectSpec& target, const TrainConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.field.validate();

    RayIndex index = build_ray_index(ds, target);
    Rng root(cfg.seed);
    Rng init_rng = root.fork(0x696e6974); // field init stream
    FieldParams<float> fp = FieldParams<float>::make(cfg.field, target.aabb());
    fp.init_params(init_rng);

    std::vector<Pose> poses;
    poses.reserve(ds.frames.size());
    for (const Frame& f : ds.frames) poses.push_back(f.pose);

    TrainResult result{std::move(fp), {}};
    TrainReport& report = result.report;
    report.n_positive = index.positives.size();
    report.n_negative = index.negatives.size();
    report.n_masked = index.masked.size();
    report.n_dropped = index.n_dropped;

    AdamState<float> field_state;
    field_state.init(result.field.param_count());
    std::vector<AdamState<double>> pose_states(poses.size());
    for (auto& st : pose_states) st.init(6);

    RayBatch batch;
    BatchGrads<float> grads;
    BatchEvalOptions opts;
    opts.w_depth = cfg.w_depth;
    opts.use_depth = cfg.use_depth;
    opts.want_pose_grads = cfg.optimize_extrinsics;
    opts.early_termination = cfg.early_termination;
    opts.loss_scale = 1.0 / double(cfg.rays_per_batch);

    for (int step = 0; step < cfg.n_steps; ++step) {
        Rng step_rng = root.fork(1, uint64_t(step));
        assemble_batch(ds, target, index, cfg, poses, step_rng, batch);
        batch_forward_backward<float>(result.field, ds.intrinsics, poses, batch, opts, grads);

        if (!std::isfinite(grads.loss_rgb) || !std::isfinite(grads.loss_depth))
            throw std::runtime_error("training diverged at step " + std::to_string(step));
        report.trace.push_back(
            {float(grads.loss_rgb), float(grads.loss_depth), float(cfg.pose_lr(step))});

        adam_step<float>(result.field.params, grads.field, field_state, cfg.field_lr,
                         cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

        if (cfg.optimize_extrinsics) {
            double lr = cfg.pose_lr(step);
            for (size_t f = 0; f < poses.size(); ++f) {
                double theta[6] = {0, 0, 0, 0, 0, 0};
                double g[6] = {grads.d_omega[f].x, grads.d_omega[f].y, grads.d_omega[f].z,
                               grads.d_tau[f].x,   grads.d_tau[f].y,   grads.d_tau[f].z};
                adam_step<double>(theta, g, pose_states[f], lr, cfg.adam_beta1, cfg.adam_beta2,
                                  cfg.adam_eps);
                poses[f] = pose_retract({theta[0], theta[1], theta[2]},
                                        {theta[3], theta[4], theta[5]}, poses[f]);
            }
        }
    }

    report.final_poses = poses;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string trace_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "step,loss_rgb,loss_depth,pose_lr\n";
    for (size_t i = 0; i < report.trace.size(); ++i) {
        const StepRecord& s = report.trace[i];
        out << i << ',' << s.loss_rgb << ',' << s.loss_depth << ',' << s.pose_lr << '\n';
    }
    return out.str();
}

} // namespace objnerf
