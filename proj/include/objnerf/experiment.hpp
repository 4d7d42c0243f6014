#pragma once

#include <optional>
#include <string>

#include "objnerf/trainer.hpp"

namespace objnerf {

// One sweep cell: synthesize -> corrupt -> train -> evaluate. The struct is
// the unit of caching; `experiment` is a CSV label and not part of the key,
// so studies sharing a cell share its run.
struct RunSpec {
    std::string experiment = "run";
    std::string scene = "four_objects";
    std::string object = "ball";
    uint64_t seed = 1;
    int n_images = 30;
    double radius_m = 0.6;
    double mask_iou_target = 1.0;
    double sigma_t_m = 0.0;
    double sigma_r_deg = 0.0;
    bool use_depth = true;
    bool optimize_extrinsics = false;
    bool eval_on_training_set = false;
    int eval_views = 20;
    int width = 160;
    int height = 120;
    TrainConfig train = TrainConfig::desk();

    std::string cache_key_json() const; // canonical form, alphabetical keys
    uint64_t cache_key() const;         // FNV-1a of cache_key_json()
};

struct RunResult {
    std::optional<double> depth_mae; // meters; absent when no correct pixels
    double mask_iou = 0;
    std::string status = "ok"; // or "error: ..."
    double wall_s = 0;
};

// Runs a full cell. Training always sees the corrupted inputs; evaluation
// always compares against pristine ground truth. Module errors land in
// result.status instead of propagating.
RunResult execute_run(const RunSpec& spec);

// Disk-memoized execute_run: results persist under cache_dir as one JSON
// file per cell keyed by cache_key(), so reruns and overlapping studies
// reuse finished work. Empty cache_dir disables caching.
RunResult run_cached(const RunSpec& spec, const std::string& cache_dir);

std::string results_csv_header();
std::string results_csv_row(const RunSpec& spec, const RunResult& result);

// Drops the in-process dataset cache (testing hook).
void clear_dataset_cache();

} // namespace objnerf
