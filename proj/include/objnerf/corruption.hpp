#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "objnerf/dataset.hpp"
#include "objnerf/image.hpp"
#include "objnerf/pose.hpp"
#include "objnerf/rng.hpp"

namespace objnerf {

struct MaskNoiseSpec {
    double target_iou = 1.0; // in (0, 1]
    // Patch radii in pixels at a 640-wide reference image, scaled
    // proportionally to the mask width.
    double radius_min = 2.0;
    double radius_max = 8.0;
    uint64_t seed = 0;
};

struct PoseNoiseSpec {
    double sigma_t = 0.0; // meters, per-axis translation std
    double sigma_r = 0.0; // radians, rotation angle std
    // One shared random rotation axis for all poses instead of a fresh axis
    // per pose.
    bool fixed_axis = false;
    uint64_t seed = 0;
};

// IoU of the object_id regions of two masks; 1 when both regions are empty.
double mask_iou(const ImageU8& a, const ImageU8& b, int object_id);

// Stamp random circles on the region boundary (add or remove with equal
// probability) until the IoU against the input lands within 0.01 of the
// target. Pixels of other instance IDs are never touched.
ImageU8 corrupt_mask(const ImageU8& mask, int object_id, const MaskNoiseSpec& spec, Rng& rng);

// Gaussian translation noise plus a random-axis rotation about each camera
// center (camera positions stay exact under pure rotation noise).
std::vector<Pose> corrupt_poses(std::span<const Pose> poses, const PoseNoiseSpec& spec, Rng& rng);

// Dataset-level application: corrupts every object's mask region in every
// frame (per-frame, per-object substreams) and/or all frame poses.
SceneDataset corrupt_dataset(const SceneDataset& ds, const MaskNoiseSpec* mask_spec,
                             const PoseNoiseSpec* pose_spec);

} // namespace objnerf
