#pragma once

#include <optional>
#include <string>
#include <vector>

#include "objnerf/dataset.hpp"
#include "objnerf/rng.hpp"

namespace objnerf {

struct Texture {
    enum Kind { Uniform, Checker, Stripe } kind = Uniform;
    Vec3d color_a{0.8, 0.8, 0.8};
    Vec3d color_b{0.2, 0.2, 0.2};
    double period = 0.02; // meters

    Vec3d sample(const Vec3d& p) const;
};

struct Primitive {
    enum Shape { Sphere, Box, Cylinder } shape = Sphere;
    Vec3d center{0, 0, 0}; // sphere
    double radius = 0.05;  // sphere & cylinder
    Vec3d box_min{0, 0, 0}, box_max{0.1, 0.1, 0.1};
    Vec3d base{0, 0, 0}, axis{0, 0, 1}; // cylinder (axis need not be unit)
    double height = 0.1;
    int object_id = 0; // 0 = scenery
    std::string name;
    Texture albedo;

    Box3d bounds() const;
};

struct DirectionalLight {
    Vec3d dir{-0.35, 0.25, -0.9}; // direction light travels
    double ambient = 0.35;
};

struct SceneDescription {
    std::vector<Primitive> primitives;
    DirectionalLight light;
    bool has_table = true;
    double table_height = 0.0;
    Texture table_albedo;
    Vec3d background{0.12, 0.13, 0.15};
};

struct TrajectorySpec {
    enum Kind { Hemisphere, Arc } kind = Hemisphere;
    double radius = 0.6;
    Vec3d center{0, 0, 0};
    int n_views = 30;
    double min_elevation = 0.15;  // radians above the horizon (hemisphere)
    double elevation_range = 0.0; // radians of elevation spread (arc)
    double arc_elevation = 0.5;   // radians, arc center elevation
};

struct SurfaceHit {
    double t = 0;
    Vec3d normal{0, 0, 1};
    Vec3d color{0, 0, 0};
    int object_id = 0;
};

// World-from-camera pose looking from eye at target, image-down roughly
// world-down (camera convention: x right, y down, z forward).
Pose look_at(const Vec3d& eye, const Vec3d& target);

// Poses at distance `radius` from the center, optical axis through the
// center. Hemisphere: jittered Fibonacci cap above the table. Arc: partial
// azimuth circle at a fixed (or slowly varying) elevation.
std::vector<Pose> sample_trajectory(const TrajectorySpec& spec, Rng& rng);

// Nearest-hit ray cast, Lambertian shading, no shadows.
std::optional<SurfaceHit> trace_scene(const SceneDescription& scene, const Vec3d& origin,
                                      const Vec3d& dir);

Frame render_ground_truth(const SceneDescription& scene, const CameraIntrinsics& intr,
                          const Pose& pose);

// Full dataset: trajectory + renders + object AABBs from primitive bounds
// inflated by `looseness` about their centers.
SceneDataset make_dataset(const SceneDescription& scene, const CameraIntrinsics& intr,
                          const TrajectorySpec& trajectory, Rng& rng, double looseness = 1.25);

// fx = fy = width, principal point at the image center.
CameraIntrinsics default_intrinsics(int width, int height);

// Built-in scenes: a four-object tabletop ("ball", "book", "laptop", "cup")
// and a single textured ball.
SceneDescription four_objects_scene();
SceneDescription sphere_scene();

SceneDescription scene_from_json(const std::string& json_text);
std::string scene_to_json(const SceneDescription& scene);
// Accepts a builtin scene name or a JSON file path.
SceneDescription load_scene(const std::string& name_or_path);

} // namespace objnerf
