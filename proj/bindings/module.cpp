#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "objnerf/corruption.hpp"
#include "objnerf/evalkit.hpp"
#include "objnerf/experiment.hpp"
#include "objnerf/isolation.hpp"
#include "objnerf/synthscene.hpp"
#include "objnerf/trainer.hpp"
#include "objnerf/volrender.hpp"

namespace py = pybind11;
using namespace objnerf;

namespace {

py::array to_numpy(const ImageU8& img) {
    if (img.channels == 1) {
        py::array_t<uint8_t> a({img.height, img.width});
        std::copy(img.data.begin(), img.data.end(), a.mutable_data());
        return a;
    }
    py::array_t<uint8_t> a({img.height, img.width, img.channels});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

py::array to_numpy(const ImageF& img) {
    py::array_t<float> a({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

ImageU8 mask_from_numpy(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::runtime_error("mask must be a 2-D uint8 array");
    ImageU8 img(int(a.shape(1)), int(a.shape(0)), 1);
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

TrainConfig build_train_config(bool paper_scale, int steps, int rays, int samples,
                               bool use_depth, bool optimize_extrinsics, double neg_ratio,
                               uint64_t seed) {
    TrainConfig tc = paper_scale ? TrainConfig{} : TrainConfig::desk();
    if (steps >= 0) tc.n_steps = steps;
    if (rays >= 0) tc.rays_per_batch = rays;
    if (samples >= 0) tc.n_samples_per_ray = samples;
    tc.use_depth = use_depth;
    tc.optimize_extrinsics = optimize_extrinsics;
    tc.neg_ratio = neg_ratio;
    tc.seed = seed;
    return tc;
}

} // namespace

PYBIND11_MODULE(_objnerf, m) {
    m.doc() = "Per-object neural fields: synthetic captures, training, evaluation";

    m.def(
        "synth_dataset",
        [](const std::string& scene, const std::string& out, int views, double radius, int width,
           int height, uint64_t seed, const std::string& trajectory) {
            SceneDescription desc = load_scene(scene);
            TrajectorySpec traj;
            if (trajectory == "arc") traj.kind = TrajectorySpec::Arc;
            else if (trajectory != "hemisphere")
                throw std::runtime_error("unknown trajectory: " + trajectory);
            traj.n_views = views;
            traj.radius = radius;
            Rng rng(seed);
            save_dataset(make_dataset(desc, default_intrinsics(width, height), traj, rng), out);
        },
        py::arg("scene"), py::arg("out"), py::arg("views") = 30, py::arg("radius") = 0.6,
        py::arg("width") = 160, py::arg("height") = 120, py::arg("seed") = 1,
        py::arg("trajectory") = "hemisphere",
        py::call_guard<py::gil_scoped_release>(),
        "Render a synthetic dataset directory from a builtin or JSON scene.");

    m.def(
        "dataset_info",
        [](const std::string& dir) {
            SceneDataset ds = load_dataset(dir);
            py::list objects;
            for (const ObjectSpec& o : ds.objects) {
                py::dict d;
                d["id"] = o.id;
                d["name"] = o.name;
                d["aabb_min"] = py::make_tuple(o.aabb_min.x, o.aabb_min.y, o.aabb_min.z);
                d["aabb_max"] = py::make_tuple(o.aabb_max.x, o.aabb_max.y, o.aabb_max.z);
                objects.append(d);
            }
            py::dict out;
            out["n_frames"] = ds.frames.size();
            out["width"] = ds.intrinsics.width;
            out["height"] = ds.intrinsics.height;
            out["objects"] = objects;
            return out;
        },
        py::arg("dir"), "Summary of a dataset directory.");

    m.def(
        "dataset_frame",
        [](const std::string& dir, int index) {
            SceneDataset ds = load_dataset(dir);
            if (index < 0 || size_t(index) >= ds.frames.size())
                throw std::runtime_error("frame index out of range");
            const Frame& f = ds.frames[index];
            py::dict out;
            out["rgb"] = to_numpy(f.rgb);
            out["depth"] = to_numpy(f.depth);
            out["mask"] = to_numpy(f.mask);
            out["camera_to_world"] = py::cast(f.pose.to_matrix4());
            return out;
        },
        py::arg("dir"), py::arg("index"), "One frame's rasters and pose.");

    m.def(
        "mask_iou",
        [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& b,
           int object_id) { return mask_iou(mask_from_numpy(a), mask_from_numpy(b), object_id); },
        py::arg("a"), py::arg("b"), py::arg("object_id"),
        "IoU of one object's region between two id masks.");

    m.def(
        "corrupt_mask",
        [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask,
           int object_id, double target_iou, uint64_t seed) {
            MaskNoiseSpec spec;
            spec.target_iou = target_iou;
            spec.seed = seed;
            Rng rng(seed);
            return to_numpy(corrupt_mask(mask_from_numpy(mask), object_id, spec, rng));
        },
        py::arg("mask"), py::arg("object_id"), py::arg("target_iou"), py::arg("seed") = 1,
        "Boundary-circle mask noise until the IoU lands within 0.01 of the target.");

    m.def(
        "classify_counts",
        [](const std::string& dir, const std::string& object) {
            SceneDataset ds = load_dataset(dir);
            const ObjectSpec* target = ds.find_object(object);
            if (!target) throw std::runtime_error("unknown object: " + object);
            RayIndex idx = build_ray_index(ds, *target);
            py::dict out;
            out["positive"] = idx.positives.size();
            out["negative"] = idx.negatives.size();
            out["masked"] = idx.masked.size();
            out["dropped"] = idx.n_dropped;
            return out;
        },
        py::arg("dir"), py::arg("object"), "Ray-class counts for one target object.");

    m.def(
        "train",
        [](const std::string& dir, const std::string& object, const std::string& checkpoint,
           int steps, int rays, int samples, bool use_depth, bool optimize_extrinsics,
           double neg_ratio, uint64_t seed, bool paper_scale) {
            SceneDataset ds = load_dataset(dir);
            const ObjectSpec* target = ds.find_object(object);
            if (!target) throw std::runtime_error("unknown object: " + object);
            TrainConfig tc = build_train_config(paper_scale, steps, rays, samples, use_depth,
                                                optimize_extrinsics, neg_ratio, seed);
            TrainResult res = train(ds, *target, tc);
            save_checkpoint(res.field, checkpoint);
            py::dict out;
            out["wall_s"] = res.report.wall_seconds;
            out["final_loss_rgb"] = res.report.trace.back().loss_rgb;
            out["n_positive"] = res.report.n_positive;
            out["n_negative"] = res.report.n_negative;
            out["n_masked"] = res.report.n_masked;
            out["n_dropped"] = res.report.n_dropped;
            return out;
        },
        py::arg("dir"), py::arg("object"), py::arg("checkpoint"), py::arg("steps") = -1,
        py::arg("rays") = -1, py::arg("samples") = -1, py::arg("use_depth") = false,
        py::arg("optimize_extrinsics") = false, py::arg("neg_ratio") = -1.0, py::arg("seed") = 1,
        py::arg("paper_scale") = false,
        "Fit a field to one object and write a checkpoint file.");

    m.def(
        "render_view",
        [](const std::string& checkpoint, const std::string& dir, int frame, int samples,
           double threshold) {
            FieldParams<float> field = load_checkpoint(checkpoint);
            SceneDataset ds = load_dataset(dir);
            if (frame < 0 || size_t(frame) >= ds.frames.size())
                throw std::runtime_error("frame index out of range");
            RenderOpts opts;
            opts.n_samples = samples;
            opts.mask_threshold = threshold;
            RenderedView v = render_object_view(field, ds.frames[frame].pose, ds.intrinsics, opts);
            py::dict out;
            out["rgb"] = to_numpy(v.rgb);
            out["depth"] = to_numpy(v.depth);
            out["mask"] = to_numpy(v.mask);
            out["opacity"] = to_numpy(v.opacity);
            return out;
        },
        py::arg("checkpoint"), py::arg("dir"), py::arg("frame") = 0, py::arg("samples") = 64,
        py::arg("threshold") = 0.5, "Render a checkpoint from a dataset frame's pose.");

    m.def(
        "evaluate",
        [](const std::string& checkpoint, const std::string& dir, const std::string& object,
           int samples, double threshold) {
            FieldParams<float> field = load_checkpoint(checkpoint);
            SceneDataset ds = load_dataset(dir);
            const ObjectSpec* target = ds.find_object(object);
            if (!target) throw std::runtime_error("unknown object: " + object);
            RenderOpts opts;
            opts.n_samples = samples;
            opts.mask_threshold = threshold;
            MetricsRecord rec = evaluate(field, eval_views_from_dataset(ds, target->id), opts);
            py::dict out;
            out["depth_mae"] = rec.depth_mae ? py::cast(*rec.depth_mae) : py::none();
            out["iou"] = rec.iou;
            out["n_correct_pixels"] = rec.n_correct_pixels;
            return out;
        },
        py::arg("checkpoint"), py::arg("dir"), py::arg("object"), py::arg("samples") = 64,
        py::arg("threshold") = 0.5,
        "Depth MAE over correctly categorized pixels and pooled mask IoU.");

    m.def(
        "integrate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& sigmas,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& colors,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& ts) {
            if (sigmas.ndim() != 1 || colors.ndim() != 2 || colors.shape(1) != 3 ||
                ts.ndim() != 1)
                throw std::runtime_error("expect sigmas (N), colors (N,3), ts (N+1)");
            size_t n = sigmas.shape(0);
            if (size_t(colors.shape(0)) != n || size_t(ts.shape(0)) != n + 1)
                throw std::runtime_error("length mismatch: need N sigmas, N colors, N+1 ts");
            std::vector<Vec3d> c(n);
            for (size_t i = 0; i < n; ++i)
                c[i] = {colors.at(i, 0), colors.at(i, 1), colors.at(i, 2)};
            RenderResult<double> r =
                integrate<double>({sigmas.data(), n}, {c.data(), n}, {ts.data(), n + 1});
            py::dict out;
            out["color"] = py::make_tuple(r.color.x, r.color.y, r.color.z);
            out["depth"] = r.depth;
            out["opacity"] = r.opacity;
            return out;
        },
        py::arg("sigmas"), py::arg("colors"), py::arg("ts"),
        "Quadrature of one ray: expected color, depth, and opacity.");
}
