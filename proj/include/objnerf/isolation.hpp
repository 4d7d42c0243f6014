#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "objnerf/dataset.hpp"
#include "objnerf/image.hpp"

namespace objnerf {

enum class RayClass : uint8_t { Positive, Negative, Masked };

struct ClassifyResult {
    RayClass cls;
    bool droppable; // ray misses the target box: no geometry to supervise
};

// One classified training pixel. gt_color/gt_depth are meaningful only for
// Positive rays.
struct ClassifiedPixel {
    int32_t frame = 0;
    int16_t u = 0, v = 0;
    RayClass cls = RayClass::Negative;
    Vec3f gt_color{0, 0, 0};
    float gt_depth = 0;
};

struct RayIndex {
    std::vector<ClassifiedPixel> positives;
    std::vector<ClassifiedPixel> negatives;
    std::vector<ClassifiedPixel> masked;
    size_t n_dropped = 0;

    size_t total() const {
        return positives.size() + negatives.size() + masked.size() + n_dropped;
    }
};

// Decide the ray's class from its mask label and the entry-order of the
// object boxes along the pixel ray. Rays that miss the target box entirely
// are droppable Negatives regardless of their label.
ClassifyResult classify_ray(const CameraIntrinsics& intr, const Frame& frame, int u, int v,
                            const ObjectSpec& target, std::span<const ObjectSpec> others);

// Classify every pixel of every frame; droppable negatives are counted but
// not stored. Deterministic and independent of thread count.
RayIndex build_ray_index(const SceneDataset& ds, const ObjectSpec& target);

// Debug rendering of the classification: green = positive, orange =
// negative, pink = masked, dark gray = dropped.
ImageU8 class_visualization(const CameraIntrinsics& intr, const Frame& frame,
                            const ObjectSpec& target, std::span<const ObjectSpec> others);

} // namespace objnerf
