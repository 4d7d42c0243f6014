#include "objnerf/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "objnerf/corruption.hpp"
#include "objnerf/evalkit.hpp"
#include "objnerf/synthscene.hpp"

namespace objnerf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDegToRad = 0.017453292519943295;

// Stream tags so dataset / corruption / evaluation RNG never collide.
constexpr uint64_t kDatasetTag = 0x64617461;
constexpr uint64_t kMaskTag = 0x6d61736b;
constexpr uint64_t kPoseTag = 0x706f7365;
constexpr uint64_t kEvalTag = 0x6576616c;

json train_config_json(const TrainConfig& t) {
    return {{"n_steps", t.n_steps},
            {"rays_per_batch", t.rays_per_batch},
            {"n_samples_per_ray", t.n_samples_per_ray},
            {"w_depth", t.w_depth},
            {"field_lr", t.field_lr},
            {"pose_lr_start", t.pose_lr_start},
            {"pose_lr_end", t.pose_lr_end},
            {"adam_beta1", t.adam_beta1},
            {"adam_beta2", t.adam_beta2},
            {"adam_eps", t.adam_eps},
            {"neg_ratio", t.neg_ratio},
            {"stratified", t.stratified},
            {"early_termination", t.early_termination},
            {"grid_levels", t.field.n_levels},
            {"grid_table", t.field.table_size},
            {"grid_features", t.field.features_per_entry},
            {"grid_base", t.field.base_resolution},
            {"grid_finest", t.field.finest_resolution},
            {"hidden_width", t.field.hidden_width},
            {"latent_dim", t.field.latent_dim},
            {"sh_degree", t.field.sh_degree},
            {"force_hash", t.field.force_hash}};
}

struct DatasetKey {
    std::string scene;
    int n_views, width, height;
    double radius;
    uint64_t seed;
    bool operator<(const DatasetKey& o) const {
        return std::tie(scene, n_views, width, height, radius, seed) <
               std::tie(o.scene, o.n_views, o.width, o.height, o.radius, o.seed);
    }
};

std::mutex g_dataset_mutex;
std::map<DatasetKey, std::shared_ptr<const SceneDataset>> g_dataset_cache;

std::shared_ptr<const SceneDataset> cached_dataset(const std::string& scene_name, int n_views,
                                                   int width, int height, double radius,
                                                   uint64_t seed) {
    DatasetKey key{scene_name, n_views, width, height, radius, seed};
    {
        std::lock_guard<std::mutex> lk(g_dataset_mutex);
        auto it = g_dataset_cache.find(key);
        if (it != g_dataset_cache.end()) return it->second;
    }
    SceneDescription scene = load_scene(scene_name);
    TrajectorySpec traj;
    traj.n_views = n_views;
    traj.radius = radius;
    Rng rng(seed);
    auto ds = std::make_shared<SceneDataset>(
        make_dataset(scene, default_intrinsics(width, height), traj, rng));
    std::lock_guard<std::mutex> lk(g_dataset_mutex);
    return g_dataset_cache.emplace(key, std::move(ds)).first->second;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex16(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::string RunSpec::cache_key_json() const {
    json j = {{"scene", scene},
              {"object", object},
              {"seed", seed},
              {"n_images", n_images},
              {"radius_m", radius_m},
              {"mask_iou_target", mask_iou_target},
              {"sigma_t_m", sigma_t_m},
              {"sigma_r_deg", sigma_r_deg},
              {"use_depth", use_depth},
              {"optimize_extrinsics", optimize_extrinsics},
              {"eval_on_training_set", eval_on_training_set},
              {"eval_views", eval_on_training_set ? 0 : eval_views},
              {"width", width},
              {"height", height},
              {"train", train_config_json(train)}};
    return j.dump();
}

uint64_t RunSpec::cache_key() const { return fnv1a(cache_key_json()); }

RunResult execute_run(const RunSpec& spec) {
    RunResult out;
    auto t0 = std::chrono::steady_clock::now();
    try {
        auto pristine =
            cached_dataset(spec.scene, spec.n_images, spec.width, spec.height, spec.radius_m,
                           spec.seed ^ kDatasetTag);
        const ObjectSpec* obj = pristine->find_object(spec.object);
        if (!obj) throw std::runtime_error("unknown object: " + spec.object);

        bool mask_noise = spec.mask_iou_target < 1.0;
        bool pose_noise = spec.sigma_t_m > 0 || spec.sigma_r_deg > 0;
        SceneDataset corrupted;
        const SceneDataset* train_ds = pristine.get();
        if (mask_noise || pose_noise) {
            MaskNoiseSpec mspec;
            mspec.target_iou = spec.mask_iou_target;
            mspec.seed = spec.seed ^ kMaskTag;
            PoseNoiseSpec pspec;
            pspec.sigma_t = spec.sigma_t_m;
            pspec.sigma_r = spec.sigma_r_deg * kDegToRad;
            pspec.seed = spec.seed ^ kPoseTag;
            corrupted = corrupt_dataset(*pristine, mask_noise ? &mspec : nullptr,
                                        pose_noise ? &pspec : nullptr);
            train_ds = &corrupted;
        }

        TrainConfig tc = spec.train;
        tc.use_depth = spec.use_depth;
        tc.optimize_extrinsics = spec.optimize_extrinsics;
        tc.seed = spec.seed;
        TrainResult tr = train(*train_ds, *obj, tc);

        std::vector<EvalView> views;
        if (spec.eval_on_training_set) {
            views = eval_views_from_dataset(*pristine, obj->id);
        } else {
            auto heldout = cached_dataset(spec.scene, spec.eval_views, spec.width, spec.height,
                                          spec.radius_m, spec.seed ^ kEvalTag);
            views = eval_views_from_dataset(*heldout, obj->id);
        }
        RenderOpts ropts;
        ropts.n_samples = tc.n_samples_per_ray;
        ropts.early_termination = tc.early_termination;
        MetricsRecord rec = evaluate(tr.field, views, ropts);
        out.depth_mae = rec.depth_mae;
        out.mask_iou = rec.iou;
        out.status = "ok";
    } catch (const std::exception& e) {
        out.status = std::string("error: ") + e.what();
    }
    out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

RunResult run_cached(const RunSpec& spec, const std::string& cache_dir) {
    if (cache_dir.empty()) return execute_run(spec);
    std::string key_json = spec.cache_key_json();
    fs::path file = fs::path(cache_dir) / ("run_" + hex16(spec.cache_key()) + ".json");

    std::ifstream in(file);
    if (in) {
        try {
            json j = json::parse(in);
            if (j.at("spec") == json::parse(key_json)) {
                RunResult r;
                if (j["result"].contains("depth_mae_m") && !j["result"]["depth_mae_m"].is_null())
                    r.depth_mae = j["result"]["depth_mae_m"].get<double>();
                r.mask_iou = j["result"].value("mask_iou", 0.0);
                r.status = j["result"].value("status", "ok");
                r.wall_s = j["result"].value("wall_s", 0.0);
                return r;
            }
        } catch (const std::exception&) {
            // unreadable cache entry: recompute below
        }
    }

    RunResult r = execute_run(spec);
    fs::create_directories(cache_dir);
    json j;
    j["spec"] = json::parse(key_json);
    j["result"] = {{"mask_iou", r.mask_iou}, {"status", r.status}, {"wall_s", r.wall_s}};
    j["result"]["depth_mae_m"] = r.depth_mae ? json(*r.depth_mae) : json(nullptr);
    std::ofstream ofs(file);
    ofs << j.dump(2) << "\n";
    return r;
}

std::string results_csv_header() {
    return "experiment,object,seed,n_images,radius_m,mask_iou_target,sigma_t_m,sigma_r_deg,"
           "use_depth,optimize_extrinsics,depth_mae_m,mask_iou,status,wall_s";
}

std::string results_csv_row(const RunSpec& spec, const RunResult& result) {
    std::ostringstream os;
    os << csv_escape(spec.experiment) << ',' << csv_escape(spec.object) << ',' << spec.seed << ','
       << spec.n_images << ',' << fmt_double(spec.radius_m) << ','
       << fmt_double(spec.mask_iou_target) << ',' << fmt_double(spec.sigma_t_m) << ','
       << fmt_double(spec.sigma_r_deg) << ',' << (spec.use_depth ? 1 : 0) << ','
       << (spec.optimize_extrinsics ? 1 : 0) << ','
       << (result.depth_mae ? fmt_double(*result.depth_mae) : std::string()) << ','
       << fmt_double(result.mask_iou) << ',' << csv_escape(result.status) << ','
       << fmt_double(result.wall_s);
    return os.str();
}

void clear_dataset_cache() {
    std::lock_guard<std::mutex> lk(g_dataset_mutex);
    g_dataset_cache.clear();
}

} // namespace objnerf
