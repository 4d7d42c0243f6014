#include "objnerf/corruption.hpp"

#include <cmath>
#include <stdexcept>

namespace objnerf {

double mask_iou(const ImageU8& a, const ImageU8& b, int object_id) {
    if (!a.same_shape(b)) throw std::runtime_error("mask dimension mismatch");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        bool ia = a.data[i] == object_id, ib = b.data[i] == object_id;
        inter += ia && ib;
        uni += ia || ib;
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

namespace {

struct PixelBox {
    int x0, y0, x1, y1; // inclusive
    bool empty() const { return x1 < x0 || y1 < y0; }
    void include(int x, int y) {
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
};

// Object pixels with any non-object 8-neighbor (out of bounds counts as
// non-object). Scans only the tracked region bounding box.
void region_boundary(const ImageU8& mask, int id, const PixelBox& bb, std::vector<int>& out) {
    out.clear();
    int w = mask.width, h = mask.height;
    for (int y = std::max(0, bb.y0); y <= std::min(h - 1, bb.y1); ++y)
        for (int x = std::max(0, bb.x0); x <= std::min(w - 1, bb.x1); ++x) {
            if (mask.at(x, y) != id) continue;
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy)
                for (int dx = -1; dx <= 1 && !edge; ++dx) {
                    if (!dx && !dy) continue;
                    int nx = x + dx, ny = y + dy;
                    edge = nx < 0 || ny < 0 || nx >= w || ny >= h || mask.at(nx, ny) != id;
                }
            if (edge) out.push_back(y * w + x);
        }
}

void stamp_circle(ImageU8& mask, int cx, int cy, double radius, int id, bool add) {
    int w = mask.width, h = mask.height;
    int r = int(std::floor(radius));
    double r2 = radius * radius;
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
            double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy > r2) continue;
            uint8_t& px = mask.at(x, y);
            if (add && px == 0) px = uint8_t(id);       // only claims background
            else if (!add && px == id) px = 0;          // only clears own pixels
        }
}

} // namespace

ImageU8 corrupt_mask(const ImageU8& mask, int object_id, const MaskNoiseSpec& spec, Rng& rng) {
    if (spec.target_iou <= 0 || spec.target_iou > 1)
        throw std::runtime_error("target iou must be in (0, 1]");
    PixelBox bb{mask.width, mask.height, -1, -1};
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y) == object_id) bb.include(x, y);
    if (bb.empty()) throw std::runtime_error("no boundary");

    ImageU8 out = mask;
    double scale = double(mask.width) / 640.0;
    double rmin = spec.radius_min * scale, rmax = spec.radius_max * scale;
    std::vector<int> boundary;

    const int max_iters = 100000;
    for (int it = 0; it < max_iters; ++it) {
        double iou = mask_iou(out, mask, object_id);
        if (std::abs(iou - spec.target_iou) <= 0.01) return out;

        region_boundary(out, object_id, bb, boundary);
        if (boundary.empty()) break; // region vanished; patches can't re-anchor
        int px = boundary[rng.uniform_int(boundary.size())];
        bool add = rng.uniform() < 0.5;
        double radius = rng.uniform(rmin, rmax);
        int cx = px % out.width, cy = px / out.width;
        stamp_circle(out, cx, cy, radius, object_id, add);
        if (add) {
            int r = int(std::floor(radius));
            bb.include(std::max(0, cx - r), std::max(0, cy - r));
            bb.include(std::min(out.width - 1, cx + r), std::min(out.height - 1, cy + r));
        }
    }
    throw std::runtime_error("target unreachable");
}

std::vector<Pose> corrupt_poses(std::span<const Pose> poses, const PoseNoiseSpec& spec,
                                Rng& rng) {
    std::vector<Pose> out(poses.begin(), poses.end());
    Vec3d shared_axis{0, 0, 1};
    if (spec.fixed_axis && spec.sigma_r > 0) rng.unit_vector(shared_axis.x, shared_axis.y, shared_axis.z);

    for (size_t i = 0; i < out.size(); ++i) {
        Rng sub = rng.fork(i);
        if (spec.sigma_t > 0) {
            out[i].translation += Vec3d{sub.normal(0, spec.sigma_t), sub.normal(0, spec.sigma_t),
                                        sub.normal(0, spec.sigma_t)};
        }
        if (spec.sigma_r > 0) {
            Vec3d axis = shared_axis;
            if (!spec.fixed_axis) sub.unit_vector(axis.x, axis.y, axis.z);
            double angle = sub.normal(0, spec.sigma_r);
            Quatd dq = Quatd::from_axis_angle(axis, angle);
            // about the camera center: rotation changes, position stays
            out[i].rotation = (dq * out[i].rotation).normalized();
        }
    }
    return out;
}

SceneDataset corrupt_dataset(const SceneDataset& ds, const MaskNoiseSpec* mask_spec,
                             const PoseNoiseSpec* pose_spec) {
    SceneDataset out = ds;

    if (mask_spec && mask_spec->target_iou < 1.0) {
        Rng root(mask_spec->seed);
        for (size_t f = 0; f < out.frames.size(); ++f)
            for (const ObjectSpec& obj : out.objects) {
                Rng sub = root.fork(f, uint64_t(obj.id));
                out.frames[f].mask = corrupt_mask(out.frames[f].mask, obj.id, *mask_spec, sub);
            }
    }

    if (pose_spec && (pose_spec->sigma_t > 0 || pose_spec->sigma_r > 0)) {
        Rng rng(pose_spec->seed);
        std::vector<Pose> poses;
        poses.reserve(out.frames.size());
        for (const Frame& fr : out.frames) poses.push_back(fr.pose);
        poses = corrupt_poses(poses, *pose_spec, rng);
        for (size_t f = 0; f < out.frames.size(); ++f) out.frames[f].pose = poses[f];
    }
    return out;
}

} // namespace objnerf
