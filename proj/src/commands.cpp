#include "objnerf/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "objnerf/corruption.hpp"
#include "objnerf/evalkit.hpp"
#include "objnerf/experiment.hpp"
#include "objnerf/isolation.hpp"
#include "objnerf/raster_io.hpp"
#include "objnerf/svgplot.hpp"
#include "objnerf/synthscene.hpp"
#include "objnerf/trainer.hpp"

namespace objnerf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDegToRad = 0.017453292519943295;

void write_run_json(const fs::path& dir, const json& j) {
    fs::create_directories(dir);
    std::ofstream out(dir / "run.json");
    out << j.dump(2) << "\n";
}

json poses_to_json(const std::vector<Pose>& poses) {
    json arr = json::array();
    for (const Pose& p : poses) arr.push_back(p.to_matrix4());
    return arr;
}

int fail(const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
}

} // namespace

int cmd_synth(const SynthArgs& args) {
    try {
        if (args.out.empty()) throw std::runtime_error("synth: --out is required");
        SceneDescription scene = load_scene(args.scene);
        TrajectorySpec traj;
        if (args.trajectory == "hemisphere") traj.kind = TrajectorySpec::Hemisphere;
        else if (args.trajectory == "arc") traj.kind = TrajectorySpec::Arc;
        else throw std::runtime_error("unknown trajectory: " + args.trajectory);
        traj.n_views = args.views;
        traj.radius = args.radius;
        int w = args.paper_scale ? 640 : args.width;
        int h = args.paper_scale ? 480 : args.height;
        Rng rng(args.seed);
        SceneDataset ds = make_dataset(scene, default_intrinsics(w, h), traj, rng);
        save_dataset(ds, args.out);
        write_run_json(args.out, {{"command", "synth"},
                                  {"scene", args.scene},
                                  {"trajectory", args.trajectory},
                                  {"views", args.views},
                                  {"radius", args.radius},
                                  {"width", w},
                                  {"height", h},
                                  {"seed", args.seed}});
        std::cout << "wrote " << ds.frames.size() << " views to " << args.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

int cmd_corrupt(const CorruptArgs& args) {
    try {
        if (args.in.empty() || args.out.empty())
            throw std::runtime_error("corrupt: --in and --out are required");
        SceneDataset ds = load_dataset(args.in);
        MaskNoiseSpec mspec;
        mspec.target_iou = args.mask_iou;
        mspec.seed = args.seed ^ 0x6d61736bULL;
        PoseNoiseSpec pspec;
        pspec.sigma_t = args.sigma_t;
        pspec.sigma_r = args.sigma_r_deg * kDegToRad;
        pspec.fixed_axis = args.fixed_axis;
        pspec.seed = args.seed ^ 0x706f7365ULL;
        bool mask_noise = args.mask_iou < 1.0;
        bool pose_noise = args.sigma_t > 0 || args.sigma_r_deg > 0;
        SceneDataset out = corrupt_dataset(ds, mask_noise ? &mspec : nullptr,
                                           pose_noise ? &pspec : nullptr);
        save_dataset(out, args.out);
        write_run_json(args.out, {{"command", "corrupt"},
                                  {"in", args.in},
                                  {"mask_iou", args.mask_iou},
                                  {"sigma_t", args.sigma_t},
                                  {"sigma_r_deg", args.sigma_r_deg},
                                  {"fixed_axis", args.fixed_axis},
                                  {"seed", args.seed}});
        // report the measured damage on the first frame for quick inspection
        if (mask_noise && !ds.frames.empty())
            for (const ObjectSpec& o : ds.objects)
                std::cout << o.name << " frame-0 mask IoU "
                          << mask_iou(ds.frames[0].mask, out.frames[0].mask, o.id) << "\n";
        std::cout << "wrote corrupted dataset to " << args.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

int cmd_classify(const ClassifyArgs& args) {
    try {
        if (args.in.empty() || args.object.empty() || args.out.empty())
            throw std::runtime_error("classify: --in, --object and --out are required");
        SceneDataset ds = load_dataset(args.in);
        const ObjectSpec* target = ds.find_object(args.object);
        if (!target) throw std::runtime_error("unknown object: " + args.object);
        std::vector<ObjectSpec> others;
        for (const ObjectSpec& o : ds.objects)
            if (o.id != target->id) others.push_back(o);

        RayIndex index = build_ray_index(ds, *target);
        fs::create_directories(args.out);
        char name[32];
        for (size_t i = 0; i < ds.frames.size(); ++i) {
            std::snprintf(name, sizeof name, "%04zu.png", i);
            ImageU8 viz = class_visualization(ds.intrinsics, ds.frames[i], *target, others);
            write_png((fs::path(args.out) / name).string(), viz);
        }
        write_run_json(args.out, {{"command", "classify"},
                                  {"in", args.in},
                                  {"object", args.object},
                                  {"positives", index.positives.size()},
                                  {"negatives", index.negatives.size()},
                                  {"masked", index.masked.size()},
                                  {"dropped", index.n_dropped}});
        std::cout << "positive " << index.positives.size() << ", negative "
                  << index.negatives.size() << ", masked " << index.masked.size() << ", dropped "
                  << index.n_dropped << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

int cmd_train(const TrainArgs& args) {
    try {
        if (args.in.empty() || args.object.empty() || args.out.empty())
            throw std::runtime_error("train: --in, --object and --out are required");
        SceneDataset ds = load_dataset(args.in);
        const ObjectSpec* target = ds.find_object(args.object);
        if (!target) throw std::runtime_error("unknown object: " + args.object);

        TrainConfig tc = args.paper_scale ? TrainConfig{} : TrainConfig::desk();
        if (args.steps >= 0) tc.n_steps = args.steps;
        if (args.rays >= 0) tc.rays_per_batch = args.rays;
        if (args.samples >= 0) tc.n_samples_per_ray = args.samples;
        tc.neg_ratio = args.neg_ratio;
        tc.use_depth = args.use_depth;
        tc.optimize_extrinsics = args.optimize_extrinsics;
        tc.seed = args.seed;

        TrainResult res = train(ds, *target, tc);

        fs::create_directories(args.out);
        save_checkpoint(res.field, (fs::path(args.out) / "checkpoint.ofp").string());
        std::ofstream trace(fs::path(args.out) / "trace.csv");
        trace << trace_csv(res.report);
        std::ofstream poses(fs::path(args.out) / "poses.json");
        poses << poses_to_json(res.report.final_poses).dump(2) << "\n";
        write_run_json(args.out,
                       {{"command", "train"},
                        {"in", args.in},
                        {"object", args.object},
                        {"seed", args.seed},
                        {"paper_scale", args.paper_scale},
                        {"config",
                         {{"n_steps", tc.n_steps},
                          {"rays_per_batch", tc.rays_per_batch},
                          {"n_samples_per_ray", tc.n_samples_per_ray},
                          {"use_depth", tc.use_depth},
                          {"optimize_extrinsics", tc.optimize_extrinsics},
                          {"w_depth", tc.w_depth},
                          {"field_lr", tc.field_lr},
                          {"pose_lr_start", tc.pose_lr_start},
                          {"pose_lr_end", tc.pose_lr_end},
                          {"neg_ratio", tc.neg_ratio},
                          {"grid_levels", tc.field.n_levels},
                          {"grid_table", tc.field.table_size},
                          {"hidden_width", tc.field.hidden_width}}},
                        {"rays", {{"positive", res.report.n_positive},
                                  {"negative", res.report.n_negative},
                                  {"masked", res.report.n_masked},
                                  {"dropped", res.report.n_dropped}}},
                        {"wall_s", res.report.wall_seconds}});
        std::cout << "trained " << tc.n_steps << " steps in " << res.report.wall_seconds
                  << " s; final loss " << res.report.trace.back().loss_rgb << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

int cmd_render(const RenderArgs& args) {
    try {
        if (args.checkpoint.empty() || args.in.empty() || args.out.empty())
            throw std::runtime_error("render: --checkpoint, --in and --out are required");
        FieldParams<float> field = load_checkpoint(args.checkpoint);
        SceneDataset ds = load_dataset(args.in);
        if (args.frame < 0 || size_t(args.frame) >= ds.frames.size())
            throw std::runtime_error("frame index out of range");
        RenderOpts opts;
        opts.n_samples = args.samples;
        opts.mask_threshold = args.threshold;
        opts.normalize_depth = !args.raw_depth;
        RenderedView view =
            render_object_view(field, ds.frames[args.frame].pose, ds.intrinsics, opts);
        fs::create_directories(args.out);
        write_png((fs::path(args.out) / "rgb.png").string(), view.rgb);
        write_dpt((fs::path(args.out) / "depth.dpt").string(), view.depth);
        ImageU8 mask_vis = view.mask;
        for (uint8_t& p : mask_vis.data) p = p ? 255 : 0;
        write_png((fs::path(args.out) / "mask.png").string(), mask_vis);
        write_dpt((fs::path(args.out) / "opacity.dpt").string(), view.opacity);
        write_run_json(args.out, {{"command", "render"},
                                  {"checkpoint", args.checkpoint},
                                  {"in", args.in},
                                  {"frame", args.frame},
                                  {"samples", args.samples},
                                  {"threshold", args.threshold},
                                  {"raw_depth", args.raw_depth}});
        std::cout << "rendered frame " << args.frame << " to " << args.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

int cmd_eval(const EvalArgs& args) {
    try {
        if (args.checkpoint.empty() || args.in.empty() || args.object.empty())
            throw std::runtime_error("eval: --checkpoint, --in and --object are required");
        FieldParams<float> field = load_checkpoint(args.checkpoint);
        SceneDataset ds = load_dataset(args.in);
        const ObjectSpec* target = ds.find_object(args.object);
        if (!target) throw std::runtime_error("unknown object: " + args.object);

        auto t0 = std::chrono::steady_clock::now();
        RenderOpts opts;
        opts.n_samples = args.samples;
        opts.mask_threshold = args.threshold;
        MetricsRecord rec = evaluate(field, eval_views_from_dataset(ds, target->id), opts);

        RunSpec spec;
        spec.experiment = args.experiment;
        spec.object = args.object;
        spec.seed = args.seed;
        spec.n_images = int(ds.frames.size());
        spec.radius_m = 0;
        spec.width = ds.intrinsics.width;
        spec.height = ds.intrinsics.height;
        RunResult result;
        result.depth_mae = rec.depth_mae;
        result.mask_iou = rec.iou;
        result.wall_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::string text = results_csv_header() + "\n" + results_csv_row(spec, result) + "\n";
        if (args.out.empty()) {
            std::cout << text;
        } else {
            fs::create_directories(args.out);
            std::ofstream csv(fs::path(args.out) / "metrics.csv");
            csv << text;
            write_run_json(args.out, {{"command", "eval"},
                                      {"checkpoint", args.checkpoint},
                                      {"in", args.in},
                                      {"object", args.object},
                                      {"samples", args.samples},
                                      {"threshold", args.threshold},
                                      {"seed", args.seed}});
            std::cout << "wrote metrics to " << args.out << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

namespace {

struct SweepConfig {
    std::string experiment = "sweep";
    std::string scene = "four_objects";
    std::vector<std::string> objects;
    std::vector<int> n_images{30};
    std::vector<double> radius_m{0.6};
    std::vector<double> mask_iou_target{1.0};
    std::vector<double> sigma_t_m{0.0};
    std::vector<double> sigma_r_deg{0.0};
    std::vector<int> use_depth{1};
    std::vector<int> optimize_extrinsics{0};
    bool eval_on_training_set = false;
    int eval_views = 20;
    int repeats = 3;
    uint64_t base_seed = 1;
    int width = 160, height = 120;
    bool paper_scale = false;
    std::string out = "results";
    // optional training overrides (quick smoke sweeps)
    int steps = -1, rays = -1, samples = -1;
};

template <typename T>
std::vector<T> axis_values(const json& j, const char* key, std::vector<T> fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    std::vector<T> out;
    if (v.is_array())
        for (const json& e : v) out.push_back(e.get<T>());
    else out.push_back(v.get<T>());
    if (out.empty()) throw std::runtime_error(std::string("empty sweep axis: ") + key);
    return out;
}

std::vector<int> flag_axis(const json& j, const char* key, std::vector<int> fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    std::vector<int> out;
    auto one = [&](const json& e) {
        bool b = e.is_boolean() ? e.get<bool>() : e.get<int>() != 0;
        out.push_back(b ? 1 : 0);
    };
    if (v.is_array())
        for (const json& e : v) one(e);
    else one(v);
    if (out.empty()) throw std::runtime_error(std::string("empty sweep axis: ") + key);
    return out;
}

SweepConfig parse_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config: " + path);
    json j = json::parse(in);
    SweepConfig c;
    c.experiment = j.value("experiment", c.experiment);
    c.scene = j.value("scene", c.scene);
    c.paper_scale = j.value("paper_scale", false);
    if (c.paper_scale) {
        c.width = 640;
        c.height = 480;
        c.eval_views = 50;
    }
    if (j.contains("objects")) c.objects = j["objects"].get<std::vector<std::string>>();
    c.n_images = axis_values<int>(j, "n_images", c.n_images);
    c.radius_m = axis_values<double>(j, "radius_m", c.radius_m);
    c.mask_iou_target = axis_values<double>(j, "mask_iou_target", c.mask_iou_target);
    c.sigma_t_m = axis_values<double>(j, "sigma_t_m", c.sigma_t_m);
    c.sigma_r_deg = axis_values<double>(j, "sigma_r_deg", c.sigma_r_deg);
    c.use_depth = flag_axis(j, "use_depth", c.use_depth);
    c.optimize_extrinsics = flag_axis(j, "optimize_extrinsics", c.optimize_extrinsics);
    c.eval_on_training_set = j.value("eval_on_training_set", c.eval_on_training_set);
    c.eval_views = j.value("eval_views", c.eval_views);
    c.repeats = j.value("repeats", c.repeats);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.out = j.value("out", c.out);
    c.steps = j.value("steps", c.steps);
    c.rays = j.value("rays", c.rays);
    c.samples = j.value("samples", c.samples);
    if (c.repeats < 1) throw std::runtime_error("repeats must be >= 1");
    return c;
}

std::vector<RunSpec> sweep_cells(const SweepConfig& c) {
    std::vector<std::string> objects = c.objects;
    if (objects.empty()) {
        SceneDescription scene = load_scene(c.scene);
        std::set<int> seen;
        for (const Primitive& p : scene.primitives)
            if (p.object_id != 0 && seen.insert(p.object_id).second)
                objects.push_back(p.name.empty() ? "object" + std::to_string(p.object_id)
                                                 : p.name);
    }
    TrainConfig base = c.paper_scale ? TrainConfig{} : TrainConfig::desk();
    if (c.steps >= 0) base.n_steps = c.steps;
    if (c.rays >= 0) base.rays_per_batch = c.rays;
    if (c.samples >= 0) base.n_samples_per_ray = c.samples;

    std::vector<RunSpec> cells;
    for (int n : c.n_images)
        for (double radius : c.radius_m)
            for (double iou : c.mask_iou_target)
                for (double st : c.sigma_t_m)
                    for (double sr : c.sigma_r_deg)
                        for (int depth : c.use_depth)
                            for (int extr : c.optimize_extrinsics)
                                for (const std::string& obj : objects)
                                    for (int rep = 0; rep < c.repeats; ++rep) {
                                        RunSpec s;
                                        s.experiment = c.experiment;
                                        s.scene = c.scene;
                                        s.object = obj;
                                        s.seed = c.base_seed + uint64_t(rep);
                                        s.n_images = n;
                                        s.radius_m = radius;
                                        s.mask_iou_target = iou;
                                        s.sigma_t_m = st;
                                        s.sigma_r_deg = sr;
                                        s.use_depth = depth != 0;
                                        s.optimize_extrinsics = extr != 0;
                                        s.eval_on_training_set = c.eval_on_training_set;
                                        s.eval_views = c.eval_views;
                                        s.width = c.width;
                                        s.height = c.height;
                                        s.train = base;
                                        cells.push_back(std::move(s));
                                    }
    return cells;
}

struct SweepAxis {
    const char* name;
    double (*get)(const RunSpec&);
    bool varying;
};

std::string condition_label(const RunSpec& s, const std::vector<SweepAxis>& axes,
                            const char* x_axis) {
    std::string label;
    for (const SweepAxis& a : axes) {
        if (!a.varying || std::string(a.name) == x_axis) continue;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s=%.4g", a.name, a.get(s));
        if (!label.empty()) label += ", ";
        label += buf;
    }
    return label.empty() ? "all" : label;
}

void write_sweep_plots(const SweepConfig& cfg, const std::vector<RunSpec>& specs,
                       const std::vector<RunResult>& results) {
    std::vector<SweepAxis> axes = {
        {"n_images", [](const RunSpec& s) { return double(s.n_images); }, cfg.n_images.size() > 1},
        {"radius", [](const RunSpec& s) { return s.radius_m; }, cfg.radius_m.size() > 1},
        {"mask_iou", [](const RunSpec& s) { return s.mask_iou_target; },
         cfg.mask_iou_target.size() > 1},
        {"sigma_t", [](const RunSpec& s) { return s.sigma_t_m; }, cfg.sigma_t_m.size() > 1},
        {"sigma_r", [](const RunSpec& s) { return s.sigma_r_deg; }, cfg.sigma_r_deg.size() > 1},
        {"depth", [](const RunSpec& s) { return s.use_depth ? 1.0 : 0.0; },
         cfg.use_depth.size() > 1},
        {"extrinsics", [](const RunSpec& s) { return s.optimize_extrinsics ? 1.0 : 0.0; },
         cfg.optimize_extrinsics.size() > 1},
    };

    for (const SweepAxis& x : axes) {
        if (!x.varying) continue;
        // (condition, x) -> samples
        std::map<std::string, std::map<double, std::vector<double>>> mae, iou;
        for (size_t i = 0; i < specs.size(); ++i) {
            if (results[i].status != "ok") continue;
            std::string cond = condition_label(specs[i], axes, x.name);
            double xv = x.get(specs[i]);
            if (results[i].depth_mae) mae[cond][xv].push_back(*results[i].depth_mae);
            iou[cond][xv].push_back(results[i].mask_iou);
        }
        auto build = [&](const std::map<std::string, std::map<double, std::vector<double>>>& by,
                         const std::string& y_label, const std::string& path) {
            PlotSpec plot;
            plot.title = cfg.experiment + ": " + y_label + " vs " + x.name;
            plot.x_label = x.name;
            plot.y_label = y_label;
            for (const auto& [cond, by_x] : by) {
                PlotSeries series;
                series.label = cond;
                for (const auto& [xv, vals] : by_x) {
                    double mean = 0;
                    for (double v : vals) mean += v;
                    mean /= double(vals.size());
                    double var = 0;
                    for (double v : vals) var += (v - mean) * (v - mean);
                    double std_dev = vals.size() > 1 ? std::sqrt(var / double(vals.size() - 1)) : 0;
                    series.x.push_back(xv);
                    series.y.push_back(mean);
                    series.err.push_back(std_dev);
                }
                plot.series.push_back(std::move(series));
            }
            if (!plot.series.empty()) write_svg_plot(plot, path);
        };
        fs::path out(cfg.out);
        build(mae, "depth MAE (m)", (out / ("plot_" + std::string(x.name) + "_mae.svg")).string());
        build(iou, "mask IoU", (out / ("plot_" + std::string(x.name) + "_iou.svg")).string());
    }
}

} // namespace

int cmd_experiment(const ExperimentArgs& args) {
    try {
        if (args.config.empty()) throw std::runtime_error("experiment: --config is required");
        SweepConfig cfg = parse_sweep_config(args.config);
        if (!args.out.empty()) cfg.out = args.out;
        std::string cache = args.cache.empty() ? (fs::path(cfg.out) / "cache").string()
                                               : args.cache;

        std::vector<RunSpec> cells = sweep_cells(cfg);
        std::vector<RunResult> results(cells.size());
        std::atomic<size_t> next{0};
        std::atomic<size_t> done{0};
        int jobs = std::max(1, args.jobs);
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                results[i] = run_cached(cells[i], cache);
                size_t d = done.fetch_add(1) + 1;
                std::fprintf(stderr, "[%zu/%zu] %s %s seed=%llu: %s\n", d, cells.size(),
                             cells[i].experiment.c_str(), cells[i].object.c_str(),
                             (unsigned long long)cells[i].seed, results[i].status.c_str());
            }
        };
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }

        fs::create_directories(cfg.out);
        std::ofstream csv(fs::path(cfg.out) / "results.csv");
        csv << results_csv_header() << "\n";
        for (size_t i = 0; i < cells.size(); ++i)
            csv << results_csv_row(cells[i], results[i]) << "\n";
        csv.close();

        write_sweep_plots(cfg, cells, results);

        // resolved sweep description, for reproducing the whole table
        std::ifstream cfg_in(args.config);
        json resolved = json::parse(cfg_in);
        resolved["resolved_out"] = cfg.out;
        resolved["resolved_cache"] = cache;
        resolved["n_cells"] = cells.size();
        std::ofstream cfg_out(fs::path(cfg.out) / "experiment.json");
        cfg_out << resolved.dump(2) << "\n";

        size_t failures = 0;
        for (const RunResult& r : results)
            if (r.status != "ok") ++failures;
        std::cout << "wrote " << cells.size() << " rows to " << cfg.out << "/results.csv";
        if (failures) std::cout << " (" << failures << " failed cells)";
        std::cout << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}

} // namespace objnerf
