#pragma once

#include <optional>
#include <vector>

#include "objnerf/dataset.hpp"
#include "objnerf/hashfield.hpp"

namespace objnerf {

struct RenderOpts {
    int n_samples = 64;
    double mask_threshold = 0.5; // rendered mask = opacity > threshold
    bool normalize_depth = true; // report D-hat / opacity inside the mask; raw D-hat otherwise
    bool early_termination = true;
};

struct RenderedView {
    ImageU8 rgb;    // 3-channel, for inspection
    ImageF depth;   // meters; 0 outside the rendered mask
    ImageU8 mask;   // 0/1
    ImageF opacity; // raw per-pixel opacity, handy for threshold sweeps
};

struct EvalView {
    Pose pose;
    CameraIntrinsics intrinsics;
    ImageU8 ideal_mask; // nonzero = object
    ImageF gt_depth;    // meters, aligned with ideal_mask
};

// Pixel tallies for one view. "Correct" pixels are rendered-AND-ideal.
struct ViewMetrics {
    int64_t n_intersection = 0;
    int64_t n_union = 0;
    int64_t n_correct = 0;
    double abs_err_sum = 0; // sum of |rendered - gt| depth over correct pixels

    double iou() const { return n_union == 0 ? 1.0 : double(n_intersection) / double(n_union); }
    std::optional<double> mae() const {
        if (n_correct == 0) return std::nullopt;
        return abs_err_sum / double(n_correct);
    }
};

struct MetricsRecord {
    std::optional<double> depth_mae; // absent when there are no correct pixels
    double iou = 0;
    int64_t n_correct_pixels = 0;
    std::vector<ViewMetrics> per_view;
};

// Renders the field through the given camera with deterministic midpoint
// sampling. Rays that miss the field AABB are background.
RenderedView render_object_view(const FieldParams<float>& field, const Pose& pose,
                                const CameraIntrinsics& intr, const RenderOpts& opts = {});

// Raster-level comparison for one view; nonzero mask pixels count as set.
// Correct pixels with invalid (zero) ground-truth depth are skipped in the
// MAE sum but still counted for IoU.
ViewMetrics compare_view(const ImageU8& rendered_mask, const ImageF& rendered_depth,
                         const ImageU8& ideal_mask, const ImageF& gt_depth);

// Pixel-pooled MAE and IoU across views.
MetricsRecord pool_metrics(std::vector<ViewMetrics> per_view);

MetricsRecord evaluate(const FieldParams<float>& field, const std::vector<EvalView>& views,
                       const RenderOpts& opts = {});

// Builds eval views for one object id: the dataset masks binarized against
// the id, depths kept only where the mask matches.
std::vector<EvalView> eval_views_from_dataset(const SceneDataset& ds, int object_id);

} // namespace objnerf
