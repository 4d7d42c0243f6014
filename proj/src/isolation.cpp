#include "objnerf/isolation.hpp"

#include <stdexcept>

#include "objnerf/threadpool.hpp"
#include "objnerf/volrender.hpp"

namespace objnerf {

ClassifyResult classify_ray(const CameraIntrinsics& intr, const Frame& frame, int u, int v,
                            const ObjectSpec& target, std::span<const ObjectSpec> others) {
    Rayd ray = pixel_ray(intr, frame.pose, u, v);
    auto target_hit = clip_to_aabb(ray, target.aabb());
    if (!target_hit) return {RayClass::Negative, true};

    int id = frame.mask.at(u, v);
    if (id == target.id) return {RayClass::Positive, false};
    if (id == 0) return {RayClass::Negative, false};

    const ObjectSpec* other = nullptr;
    for (const ObjectSpec& o : others)
        if (o.id == id && o.id != target.id) {
            other = &o;
            break;
        }
    if (!other) throw std::runtime_error("undeclared instance id");

    // Occluder: the labeled object's box starts no later than the target's
    // along this ray (ties conservatively excluded as Masked).
    auto other_hit = clip_to_aabb(ray, other->aabb());
    if (other_hit && other_hit->t_near <= target_hit->t_near) return {RayClass::Masked, false};
    return {RayClass::Negative, false};
}

RayIndex build_ray_index(const SceneDataset& ds, const ObjectSpec& target) {
    int n_frames = int(ds.frames.size());
    std::vector<RayIndex> per_frame(n_frames);

    parallel_chunks(n_frames, 1, [&](int, int64_t begin, int64_t end) {
        for (int64_t f = begin; f < end; ++f) {
            const Frame& frame = ds.frames[f];
            RayIndex& out = per_frame[f];
            for (int v = 0; v < ds.intrinsics.height; ++v)
                for (int u = 0; u < ds.intrinsics.width; ++u) {
                    ClassifyResult r =
                        classify_ray(ds.intrinsics, frame, u, v, target, ds.objects);
                    if (r.droppable) {
                        ++out.n_dropped;
                        continue;
                    }
                    ClassifiedPixel px;
                    px.frame = int32_t(f);
                    px.u = int16_t(u);
                    px.v = int16_t(v);
                    px.cls = r.cls;
                    if (r.cls == RayClass::Positive) {
                        px.gt_color = {frame.rgb.at(u, v, 0) / 255.0f,
                                       frame.rgb.at(u, v, 1) / 255.0f,
                                       frame.rgb.at(u, v, 2) / 255.0f};
                        px.gt_depth = frame.depth.at(u, v);
                        out.positives.push_back(px);
                    } else if (r.cls == RayClass::Masked) {
                        out.masked.push_back(px);
                    } else {
                        out.negatives.push_back(px);
                    }
                }
        }
    });

    RayIndex index;
    for (const RayIndex& pf : per_frame) {
        index.positives.insert(index.positives.end(), pf.positives.begin(), pf.positives.end());
        index.negatives.insert(index.negatives.end(), pf.negatives.begin(), pf.negatives.end());
        index.masked.insert(index.masked.end(), pf.masked.begin(), pf.masked.end());
        index.n_dropped += pf.n_dropped;
    }
    return index;
}

ImageU8 class_visualization(const CameraIntrinsics& intr, const Frame& frame,
                            const ObjectSpec& target, std::span<const ObjectSpec> others) {
    ImageU8 img(intr.width, intr.height, 3);
    for (int v = 0; v < intr.height; ++v)
        for (int u = 0; u < intr.width; ++u) {
            ClassifyResult r = classify_ray(intr, frame, u, v, target, others);
            uint8_t c[3];
            if (r.droppable) {
                c[0] = c[1] = c[2] = 40;
            } else if (r.cls == RayClass::Positive) {
                c[0] = 60, c[1] = 180, c[2] = 75;
            } else if (r.cls == RayClass::Masked) {
                c[0] = 255, c[1] = 105, c[2] = 180;
            } else {
                c[0] = 255, c[1] = 140, c[2] = 0;
            }
            for (int k = 0; k < 3; ++k) img.at(u, v, k) = c[k];
        }
    return img;
}

} // namespace objnerf
