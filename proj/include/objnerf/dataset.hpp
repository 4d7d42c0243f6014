#pragma once

#include <string>
#include <vector>

#include "objnerf/camera.hpp"
#include "objnerf/image.hpp"
#include "objnerf/pose.hpp"
#include "objnerf/vec3.hpp"

namespace objnerf {

// One posed view: 8-bit RGB, float32 depth in meters (0 = invalid),
// 8-bit instance-id mask (0 = background).
struct Frame {
    ImageU8 rgb;
    ImageF depth;
    ImageU8 mask;
    Pose pose;
};

struct ObjectSpec {
    int id = 0;
    std::string name;
    Vec3d aabb_min;
    Vec3d aabb_max;

    Box3d aabb() const { return {aabb_min, aabb_max}; }
};

struct SceneDataset {
    CameraIntrinsics intrinsics;
    std::vector<Frame> frames;
    std::vector<ObjectSpec> objects;

    const ObjectSpec* find_object(int id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    const ObjectSpec* find_object(const std::string& name) const {
        for (const auto& o : objects)
            if (o.name == name) return &o;
        return nullptr;
    }

    // Checks raster shapes against the intrinsics, mask ids against the
    // object list, and depth non-negativity.
    void validate() const;
};

// Directory layout: manifest.json, rgb/%04d.png, depth/%04d.dpt, mask/%04d.png.
SceneDataset load_dataset(const std::string& dir);
void save_dataset(const SceneDataset& ds, const std::string& dir);

} // namespace objnerf
