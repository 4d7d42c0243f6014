#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "objnerf/dataset.hpp"
#include "objnerf/hashfield.hpp"
#include "objnerf/isolation.hpp"
#include "objnerf/pose.hpp"
#include "objnerf/threadpool.hpp"
#include "objnerf/volrender.hpp"

namespace objnerf {

// Depth residuals apply only to positive rays that render opaquely.
inline constexpr double kTransmittanceGate = 1e-4;

struct TrainConfig {
    int n_steps = 2000;
    int rays_per_batch = 4096;
    int n_samples_per_ray = 128;
    double w_depth = 3.0;
    bool use_depth = false;
    bool optimize_extrinsics = false;
    double field_lr = 1e-2;
    double pose_lr_start = 3.3e-4;
    double pose_lr_end = 1e-5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.99;
    double adam_eps = 1e-9;
    // Expected negatives per positive in a batch; < 0 samples uniformly over
    // the positive+negative pool.
    double neg_ratio = -1.0;
    uint64_t seed = 0;
    bool stratified = true;
    bool early_termination = true;
    HashGridConfig field;

    // Reduced settings that train in seconds on one CPU core (pair with
    // 160x120 datasets).
    static TrainConfig desk() {
        TrainConfig c;
        c.n_steps = 768;
        c.rays_per_batch = 1024;
        c.n_samples_per_ray = 64;
        c.field.n_levels = 8;
        c.field.table_size = 1u << 15;
        c.field.base_resolution = 16;
        c.field.finest_resolution = 256;
        c.field.hidden_width = 16;
        c.field.latent_dim = 7;
        c.field.sh_degree = 2;
        return c;
    }

    // Geometric decay from pose_lr_start to pose_lr_end across all steps.
    double pose_lr(int step) const {
        if (n_steps <= 1) return pose_lr_start;
        double f = double(step) / double(n_steps - 1);
        return pose_lr_start * std::pow(pose_lr_end / pose_lr_start, f);
    }
};

template <typename S>
struct AdamState {
    std::vector<S> m, v;
    int64_t t = 0;

    void init(size_t n) {
        m.assign(n, S(0));
        v.assign(n, S(0));
        t = 0;
    }
};

// Bias-corrected Adam (Kingma & Ba, Algorithm 1), one step over all entries.
template <typename S>
void adam_step(std::span<S> params, std::span<const S> grads, AdamState<S>& st, double lr,
               double beta1, double beta2, double eps) {
    ++st.t;
    double bc1 = 1.0 - std::pow(beta1, double(st.t));
    double bc2 = 1.0 - std::pow(beta2, double(st.t));
    for (size_t i = 0; i < params.size(); ++i) {
        double g = double(grads[i]);
        double m = beta1 * double(st.m[i]) + (1.0 - beta1) * g;
        double v = beta2 * double(st.v[i]) + (1.0 - beta2) * g * g;
        st.m[i] = S(m);
        st.v[i] = S(v);
        params[i] -= S(lr * (m / bc1) / (std::sqrt(v / bc2) + eps));
    }
}

// The photometric residual of one ray. Every ray is composited over a fresh
// random background color each step: residual C + (1 - opacity) * c_random
// minus the target. Positive rays target their pixel color, so leftover
// transmittance is punished and the surface is driven fully opaque; negative
// rays target the background itself, so only a zero-density ray can track the
// moving color and free space is carved instead of painted gray. Masked rays
// never reach a batch.
Vec3d rgb_residual(RayClass cls, const Vec3d& rendered, double opacity, const Vec3d& gt_color,
                   Rng& rng);

// Eq.-style gated depth residual: nonzero only for opaque positive rays with
// valid ground truth.
double depth_residual(RayClass cls, double rendered_depth, double t_final, double gt_depth);

// One training batch with frozen sample distances. Geometry is kept in
// double so the same batch can be re-evaluated under perturbed poses
// (finite-difference tests) without re-sampling.
struct RayBatch {
    int n_samples = 0; // quadrature nodes per ray; ts holds n_samples+1 per ray
    std::vector<int32_t> frame;
    std::vector<Vec3d> d_cam; // unit camera-space direction
    std::vector<double> ts;
    std::vector<Vec3f> target_color; // gt pixel color, or the step's random color
    std::vector<Vec3f> bg_color;     // random background composited behind the ray
    std::vector<float> gt_depth;     // 0 disables the depth term for the ray
    std::vector<uint8_t> depth_gate; // positive ray with valid gt depth
    std::vector<uint8_t> valid;      // clipped successfully at assembly time

    size_t n_rays() const { return frame.size(); }
    void clear() {
        frame.clear(), d_cam.clear(), ts.clear(), target_color.clear(), bg_color.clear(),
            gt_depth.clear(), depth_gate.clear(), valid.clear();
    }
};

// Gradients and losses of one batch evaluation. Loss values are sums over
// the batch; the caller normalizes.
template <typename S>
struct BatchGrads {
    std::vector<S> field; // dense, FieldParams::param_count()
    std::vector<Vec3d> d_omega, d_tau; // per frame, left-tangent pose gradients
    double loss_rgb = 0;
    double loss_depth = 0;
};

struct BatchEvalOptions {
    double w_depth = 3.0;
    bool use_depth = false;
    bool want_pose_grads = false;
    bool early_termination = false;
    double loss_scale = 1.0; // multiplies both loss terms and all gradients
    int chunk_rays = 64;
};

// Evaluate the training loss of a batch under the given per-frame poses and
// accumulate gradients. Sample distances stay frozen: poses move ray origins
// and directions only. Deterministic for any thread count (fixed-order chunk
// reduction).
template <typename S>
void batch_forward_backward(const FieldParams<S>& fp, const CameraIntrinsics& intr,
                            std::span<const Pose> poses, const RayBatch& batch,
                            const BatchEvalOptions& opts, BatchGrads<S>& out);

// Loss-only variant (used by finite-difference checks).
template <typename S>
void batch_forward(const FieldParams<S>& fp, const CameraIntrinsics& intr,
                   std::span<const Pose> poses, const RayBatch& batch,
                   const BatchEvalOptions& opts, double& loss_rgb, double& loss_depth);

struct StepRecord {
    float loss_rgb = 0;   // batch mean of ||e_rgb||
    float loss_depth = 0; // batch mean of |e_depth| (zero when depth off)
    float pose_lr = 0;
};

struct TrainReport {
    std::vector<StepRecord> trace;
    std::vector<Pose> final_poses;
    double wall_seconds = 0;
    size_t n_positive = 0, n_negative = 0, n_masked = 0, n_dropped = 0;
};

struct TrainResult {
    FieldParams<float> field;
    TrainReport report;
};

// Draw one batch from the ray index under the current poses. Serial and
// deterministic; consumes the step's RNG stream.
void assemble_batch(const SceneDataset& ds, const ObjectSpec& target, const RayIndex& index,
                    const TrainConfig& cfg, std::span<const Pose> poses, Rng& rng,
                    RayBatch& batch);

TrainResult train(const SceneDataset& ds, const ObjectSpec& target, const TrainConfig& cfg);

// Trace serialization: "step,loss_rgb,loss_depth,pose_lr" rows.
std::string trace_csv(const TrainReport& report);

} // namespace objnerf
