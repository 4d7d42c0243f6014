#include <CLI11.hpp>

#include "objnerf/commands.hpp"
#include "objnerf/threadpool.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Per-object neural fields from masked tabletop captures"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads (0 = OBJNERF_THREADS env or hardware count)");

    objnerf::SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "Render a synthetic dataset");
    s->add_option("--scene", synth.scene, "builtin scene name or scene JSON path");
    s->add_option("--out", synth.out, "output dataset directory")->required();
    s->add_option("--trajectory", synth.trajectory, "hemisphere or arc");
    s->add_option("--views", synth.views, "number of views");
    s->add_option("--radius", synth.radius, "camera distance from the scene center (m)");
    s->add_option("--width", synth.width, "image width");
    s->add_option("--height", synth.height, "image height");
    s->add_option("--seed", synth.seed, "trajectory RNG seed");
    s->add_flag("--paper-scale", synth.paper_scale, "640x480 images");

    objnerf::CorruptArgs corrupt;
    CLI::App* c = app.add_subcommand("corrupt", "Inject mask and/or pose noise");
    c->add_option("--in", corrupt.in, "input dataset directory")->required();
    c->add_option("--out", corrupt.out, "output dataset directory")->required();
    c->add_option("--mask-iou", corrupt.mask_iou, "target mask IoU against the original");
    c->add_option("--sigma-t", corrupt.sigma_t, "translation noise std (m)");
    c->add_option("--sigma-r", corrupt.sigma_r_deg, "rotation noise std (degrees)");
    c->add_flag("--fixed-axis", corrupt.fixed_axis, "one shared rotation axis for all poses");
    c->add_option("--seed", corrupt.seed, "noise RNG seed");

    objnerf::ClassifyArgs classify;
    CLI::App* k = app.add_subcommand("classify", "Visualize the ray decomposition");
    k->add_option("--in", classify.in, "dataset directory")->required();
    k->add_option("--object", classify.object, "target object name")->required();
    k->add_option("--out", classify.out, "output directory")->required();

    objnerf::TrainArgs train;
    CLI::App* t = app.add_subcommand("train", "Fit a field to one object");
    t->add_option("--in", train.in, "dataset directory")->required();
    t->add_option("--object", train.object, "target object name")->required();
    t->add_option("--out", train.out, "output directory")->required();
    t->add_option("--seed", train.seed, "training seed");
    t->add_flag("--depth", train.use_depth, "enable the depth loss");
    t->add_flag("--optimize-extrinsics", train.optimize_extrinsics, "jointly refine camera poses");
    t->add_flag("--paper-scale", train.paper_scale, "full-scale settings (2000 steps, 4096 rays)");
    t->add_option("--steps", train.steps, "override training steps");
    t->add_option("--rays", train.rays, "override rays per batch");
    t->add_option("--samples", train.samples, "override samples per ray");
    t->add_option("--neg-ratio", train.neg_ratio,
                  "negatives per positive in a batch (< 0: uniform over the pool)");

    objnerf::RenderArgs render;
    CLI::App* r = app.add_subcommand("render", "Render a checkpoint from a dataset pose");
    r->add_option("--checkpoint", render.checkpoint, "checkpoint file")->required();
    r->add_option("--in", render.in, "dataset supplying pose and intrinsics")->required();
    r->add_option("--frame", render.frame, "frame index");
    r->add_option("--out", render.out, "output directory")->required();
    r->add_option("--samples", render.samples, "samples per ray");
    r->add_option("--threshold", render.threshold, "mask opacity threshold");
    r->add_flag("--raw-depth", render.raw_depth, "skip opacity normalization of depth");

    objnerf::EvalArgs eval;
    CLI::App* e = app.add_subcommand("eval", "Score a checkpoint against ground truth");
    e->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
    e->add_option("--in", eval.in, "dataset with ideal masks and depth")->required();
    e->add_option("--object", eval.object, "target object name")->required();
    e->add_option("--out", eval.out, "output directory (default: print to stdout)");
    e->add_option("--experiment", eval.experiment, "experiment label for the CSV row");
    e->add_option("--seed", eval.seed, "seed label for the CSV row");
    e->add_option("--samples", eval.samples, "samples per ray");
    e->add_option("--threshold", eval.threshold, "mask opacity threshold");

    objnerf::ExperimentArgs exp;
    CLI::App* x = app.add_subcommand("experiment", "Run a sweep from a JSON config");
    x->add_option("--config", exp.config, "sweep config JSON")->required();
    x->add_option("--out", exp.out, "override the config's output directory");
    x->add_option("--cache", exp.cache, "run cache directory (default <out>/cache)");
    x->add_option("--jobs", exp.jobs, "concurrent sweep cells");

    CLI11_PARSE(app, argc, argv);

    if (threads > 0) objnerf::ThreadPool::set_global_size(threads);

    if (*s) return objnerf::cmd_synth(synth);
    if (*c) return objnerf::cmd_corrupt(corrupt);
    if (*k) return objnerf::cmd_classify(classify);
    if (*t) return objnerf::cmd_train(train);
    if (*r) return objnerf::cmd_render(render);
    if (*e) return objnerf::cmd_eval(eval);
    if (*x) return objnerf::cmd_experiment(exp);
    return 1;
}
