#pragma once

#include <cstdint>
#include <string>

namespace objnerf {

struct SynthArgs {
    std::string scene = "four_objects"; // builtin name or JSON path
    std::string out;
    std::string trajectory = "hemisphere"; // or "arc"
    int views = 30;
    double radius = 0.6;
    int width = 160, height = 120;
    uint64_t seed = 1;
    bool paper_scale = false; // 640x480
};

struct CorruptArgs {
    std::string in, out;
    double mask_iou = 1.0;    // 1.0 = leave masks alone
    double sigma_t = 0.0;     // meters
    double sigma_r_deg = 0.0; // degrees
    bool fixed_axis = false;
    uint64_t seed = 1;
};

struct ClassifyArgs {
    std::string in, object, out;
};

struct TrainArgs {
    std::string in, object, out;
    uint64_t seed = 1;
    bool use_depth = false;
    bool optimize_extrinsics = false;
    bool paper_scale = false;
    // < 0 keeps the profile default
    int steps = -1, rays = -1, samples = -1;
    double neg_ratio = -1.0;
};

struct RenderArgs {
    std::string checkpoint;
    std::string in; // dataset supplying pose + intrinsics
    int frame = 0;
    std::string out;
    int samples = 64;
    double threshold = 0.5;
    bool raw_depth = false; // report D-hat instead of D-hat / opacity
};

struct EvalArgs {
    std::string checkpoint, in, object;
    std::string out; // csv path; empty prints to stdout
    std::string experiment = "eval";
    uint64_t seed = 0;
    int samples = 64;
    double threshold = 0.5;
};

struct ExperimentArgs {
    std::string config; // JSON sweep description
    std::string out;    // overrides the config's output dir
    std::string cache;  // run cache dir; default <out>/cache
    int jobs = 1;
};

// Each returns a process exit code; failures print one line to stderr.
int cmd_synth(const SynthArgs&);
int cmd_corrupt(const CorruptArgs&);
int cmd_classify(const ClassifyArgs&);
int cmd_train(const TrainArgs&);
int cmd_render(const RenderArgs&);
int cmd_eval(const EvalArgs&);
int cmd_experiment(const ExperimentArgs&);

} // namespace objnerf
