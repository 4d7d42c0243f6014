#include <doctest.h>

#include <objnerf/synthscene.hpp>
#include <objnerf/trainer.hpp>

#include <cmath>
#include <cstring>

using namespace objnerf;

namespace {

HashGridConfig unit_grid() {
    HashGridConfig g;
    g.n_levels = 3;
    g.table_size = 1u << 10;
    g.base_resolution = 4;
    g.finest_resolution = 16;
    g.hidden_width = 8;
    g.latent_dim = 4;
    g.sh_degree = 2;
    return g;
}

TrainConfig unit_train_config() {
    TrainConfig cfg;
    cfg.n_steps = 20;
    cfg.rays_per_batch = 128;
    cfg.n_samples_per_ray = 16;
    cfg.field = unit_grid();
    return cfg;
}

SceneDataset small_sphere_dataset(int n_views = 4, int w = 48, int h = 36, uint64_t seed = 7) {
    Rng rng(seed);
    TrajectorySpec spec;
    spec.n_views = n_views;
    return make_dataset(sphere_scene(), default_intrinsics(w, h), spec, rng);
}

double total_loss(const StepRecord& s, double w_depth) {
    return double(s.loss_rgb) + w_depth * double(s.loss_depth);
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("rgb_residual: background compositing semantics") {
    Rng rng(42);

    SUBCASE("masked rays contribute nothing and leave the rng untouched") {
        Rng a(5), b(5);
        Vec3d r = rgb_residual(RayClass::Masked, {0.7, 0.2, 0.9}, 0.5, {0.1, 0.1, 0.1}, a);
        CHECK(norm(r) == 0.0);
        CHECK(a.uniform() == b.uniform());
    }

    SUBCASE("converged positive ray: opaque and color-matched, zero residual") {
        Vec3d gt{0.3, 0.6, 0.9};
        Vec3d r = rgb_residual(RayClass::Positive, gt, 1.0, gt, rng);
        CHECK(norm(r) == 0.0);
    }

    SUBCASE("positive ray with leftover transmittance sees the background") {
        Vec3d gt{0.25, 0.25, 0.28};
        Rng inner(99), mirror(99);
        Vec3d r = rgb_residual(RayClass::Positive, gt, 0.7, gt, inner);
        Vec3d bg{mirror.uniform(), mirror.uniform(), mirror.uniform()};
        CHECK(norm(r - bg * 0.3) < 1e-15);
    }

    SUBCASE("converged negative ray: empty field tracks any background exactly") {
        for (int i = 0; i < 100; ++i) {
            Vec3d r = rgb_residual(RayClass::Negative, {0, 0, 0}, 0.0, {0, 0, 0}, rng);
            REQUIRE(norm(r) == 0.0);
        }
    }

    SUBCASE("opaque black negative ray: squared residual has unit mean") {
        // residual = -background, so E||r||^2 = 3 E[U^2] = 1
        double sum = 0, sum1 = 0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            Vec3d r = rgb_residual(RayClass::Negative, {0, 0, 0}, 1.0, {0, 0, 0}, rng);
            sum += dot(r, r);
            sum1 += r.x;
        }
        CHECK(sum / n == doctest::Approx(1.0).epsilon(0.02));
        CHECK(sum1 / n == doctest::Approx(-0.5).epsilon(0.02));
    }
}

TEST_CASE("depth_residual: transmittance-gated absolute error") {
    CHECK(kTransmittanceGate == 1e-4);

    // gate open: the ray has not rendered opaquely yet
    CHECK(depth_residual(RayClass::Positive, 1.0, 0.5, 0.9) == 0.0);
    // opaque and exact
    CHECK(depth_residual(RayClass::Positive, 0.9, 1e-6, 0.9) == 0.0);
    // opaque with error
    CHECK(depth_residual(RayClass::Positive, 1.0, 1e-6, 0.9) ==
          doctest::Approx(0.1).epsilon(1e-12));
    // boundary: T_final == gate stays closed
    CHECK(depth_residual(RayClass::Positive, 1.0, 1e-4, 0.9) == 0.0);
    CHECK(depth_residual(RayClass::Positive, 1.0, 0.99e-4, 0.9) ==
          doctest::Approx(0.1).epsilon(1e-9));
    // missing ground truth disables the term
    CHECK(depth_residual(RayClass::Positive, 1.0, 1e-6, 0.0) == 0.0);
    // only positive rays are supervised
    CHECK(depth_residual(RayClass::Negative, 1.0, 1e-6, 0.9) == 0.0);
    CHECK(depth_residual(RayClass::Masked, 1.0, 1e-6, 0.9) == 0.0);
}

TEST_CASE("adam_step: bias-corrected update") {
    SUBCASE("zero gradient moves nothing") {
        std::vector<double> p{1.5, -2.0}, g{0, 0};
        AdamState<double> st;
        st.init(2);
        adam_step<double>(p, g, st, 0.01, 0.9, 0.99, 1e-9);
        CHECK(p[0] == 1.5);
        CHECK(p[1] == -2.0);
        CHECK(st.t == 1);
    }

    SUBCASE("first step with constant gradient is a signed unit step") {
        // t=1: m_hat = g, v_hat = g^2, update = -lr * g / (|g| + eps)
        std::vector<double> p{1.0}, g{0.5};
        AdamState<double> st;
        st.init(1);
        adam_step<double>(p, g, st, 0.01, 0.9, 0.99, 1e-9);
        double want = 1.0 - 0.01 * 0.5 / (0.5 + 1e-9);
        CHECK(p[0] == doctest::Approx(want).epsilon(1e-15));

        std::vector<double> pn{1.0}, gn{-3.0};
        AdamState<double> st2;
        st2.init(1);
        adam_step<double>(pn, gn, st2, 0.01, 0.9, 0.99, 1e-9);
        CHECK(pn[0] == doctest::Approx(1.0 + 0.01 * 3.0 / (3.0 + 1e-9)).epsilon(1e-15));
    }

    SUBCASE("trajectory matches an independent scalar reference") {
        double beta1 = 0.9, beta2 = 0.99, eps = 1e-9, lr = 0.02;
        std::vector<double> p{0.3};
        AdamState<double> st;
        st.init(1);

        double rp = 0.3, rm = 0, rv = 0;
        Rng rng(3);
        for (int t = 1; t <= 10; ++t) {
            double grad = rng.uniform(-1, 1);
            std::vector<double> g{grad};
            adam_step<double>(p, g, st, lr, beta1, beta2, eps);

            rm = beta1 * rm + (1 - beta1) * grad;
            rv = beta2 * rv + (1 - beta2) * grad * grad;
            double mhat = rm / (1 - std::pow(beta1, t));
            double vhat = rv / (1 - std::pow(beta2, t));
            rp -= lr * mhat / (std::sqrt(vhat) + eps);
            REQUIRE(p[0] == doctest::Approx(rp).epsilon(1e-14));
        }
    }

    SUBCASE("identical state gives identical results") {
        std::vector<float> p1{1.f, 2.f}, p2{1.f, 2.f}, g{0.3f, -0.7f};
        AdamState<float> s1, s2;
        s1.init(2);
        s2.init(2);
        for (int t = 0; t < 5; ++t) {
            adam_step<float>(p1, g, s1, 0.01, 0.9, 0.99, 1e-9);
            adam_step<float>(p2, g, s2, 0.01, 0.9, 0.99, 1e-9);
        }
        CHECK(p1[0] == p2[0]);
        CHECK(p1[1] == p2[1]);
    }
}

TEST_CASE("assemble_batch: shape, class ratio override, masked inertness") {
    SceneDataset ds;
    {
        Rng rng(11);
        TrajectorySpec spec;
        spec.n_views = 4;
        ds = make_dataset(four_objects_scene(), default_intrinsics(48, 36), spec, rng);
    }
    const ObjectSpec* cup = ds.find_object(4);
    REQUIRE(cup != nullptr);
    RayIndex index = build_ray_index(ds, *cup);
    REQUIRE(!index.masked.empty());

    std::vector<Pose> poses;
    for (const Frame& f : ds.frames) poses.push_back(f.pose);

    TrainConfig cfg = unit_train_config();

    SUBCASE("batch vectors have consistent sizes") {
        Rng rng(1);
        RayBatch batch;
        assemble_batch(ds, *cup, index, cfg, poses, rng, batch);
        CHECK(batch.n_rays() == size_t(cfg.rays_per_batch));
        CHECK(batch.ts.size() == batch.n_rays() * size_t(cfg.n_samples_per_ray + 1));
        CHECK(batch.target_color.size() == batch.n_rays());
        CHECK(batch.bg_color.size() == batch.n_rays());
        CHECK(batch.valid.size() == batch.n_rays());
        for (uint8_t v : batch.valid) CHECK(v == 1); // ideal poses: stored rays hit the box
    }

    SUBCASE("neg_ratio pins the class mix") {
        Rng rng(2);
        RayBatch batch;
        cfg.neg_ratio = 0.0; // positives only
        assemble_batch(ds, *cup, index, cfg, poses, rng, batch);
        for (float d : batch.gt_depth) CHECK(d > 0);

        cfg.neg_ratio = 1e9; // negatives only
        assemble_batch(ds, *cup, index, cfg, poses, rng, batch);
        for (float d : batch.gt_depth) CHECK(d == 0);
    }

    SUBCASE("the masked list's existence does not perturb sampling") {
        RayIndex stripped = index;
        stripped.masked.clear();
        Rng r1(3), r2(3);
        RayBatch a, b;
        assemble_batch(ds, *cup, index, cfg, poses, r1, a);
        assemble_batch(ds, *cup, stripped, cfg, poses, r2, b);
        REQUIRE(a.ts == b.ts);
        REQUIRE(a.frame == b.frame);
        REQUIRE(std::memcmp(a.target_color.data(), b.target_color.data(),
                            a.target_color.size() * sizeof(Vec3f)) == 0);
        REQUIRE(a.gt_depth == b.gt_depth);
    }
}

TEST_CASE("pose tangent gradients match finite differences on a micro problem") {
    SceneDataset ds = small_sphere_dataset(2, 32, 24);
    const ObjectSpec& target = ds.objects[0];
    RayIndex index = build_ray_index(ds, target);

    auto fp = FieldParams<double>::make(unit_grid(), target.aabb());
    Rng prng(17);
    fp.init_params(prng);
    for (size_t i = 0; i < fp.grid_size; ++i) fp.params[i] = prng.uniform(-0.4, 0.4);

    std::vector<Pose> poses;
    for (const Frame& f : ds.frames) poses.push_back(f.pose);

    TrainConfig cfg = unit_train_config();
    cfg.rays_per_batch = 4;
    cfg.n_samples_per_ray = 8;
    Rng brng(23);
    RayBatch batch;
    assemble_batch(ds, target, index, cfg, poses, brng, batch);

    BatchEvalOptions opts;
    opts.use_depth = true;
    opts.want_pose_grads = true;
    opts.early_termination = false; // exact quadrature for differencing
    BatchGrads<double> grads;
    batch_forward_backward<double>(fp, ds.intrinsics, poses, batch, opts, grads);

    auto loss_at = [&](const std::vector<Pose>& ps) {
        double lr = 0, ld = 0;
        batch_forward<double>(fp, ds.intrinsics, ps, batch, opts, lr, ld);
        return lr + opts.w_depth * ld;
    };

    double h = 1e-6;
    for (size_t f = 0; f < poses.size(); ++f) {
        for (int axis = 0; axis < 6; ++axis) {
            Vec3d omega{0, 0, 0}, tau{0, 0, 0};
            (axis < 3 ? (&omega.x)[axis] : (&tau.x)[axis - 3]) = h;
            std::vector<Pose> up = poses, dn = poses;
            up[f] = pose_retract(omega, tau, poses[f]);
            (axis < 3 ? (&omega.x)[axis] : (&tau.x)[axis - 3]) = -h;
            dn[f] = pose_retract(omega, tau, poses[f]);
            double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
            double an = axis < 3 ? (&grads.d_omega[f].x)[axis] : (&grads.d_tau[f].x)[axis - 3];
            if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
            CHECK(an == doctest::Approx(fd).epsilon(1e-2));
        }
    }
}

TEST_CASE("train: zero steps, determinism, schedule, trace") {
    SceneDataset ds = small_sphere_dataset();
    const ObjectSpec& target = ds.objects[0];

    SUBCASE("n_steps = 0 leaves parameters at their seeded initialization") {
        TrainConfig cfg = unit_train_config();
        cfg.n_steps = 0;
        TrainResult a = train(ds, target, cfg);
        TrainResult b = train(ds, target, cfg);
        CHECK(a.report.trace.empty());
        REQUIRE(a.field.params == b.field.params);
        REQUIRE(a.report.final_poses.size() == ds.frames.size());
        for (size_t i = 0; i < ds.frames.size(); ++i)
            CHECK(a.report.final_poses[i].translation.x == ds.frames[i].pose.translation.x);
        CHECK(a.report.n_positive > 0);
        CHECK(a.report.n_positive + a.report.n_negative + a.report.n_masked +
                  a.report.n_dropped ==
              size_t(48) * 36 * 4);
    }

    SUBCASE("same seed reproduces the run bit for bit; seeds decorrelate") {
        TrainConfig cfg = unit_train_config();
        cfg.n_steps = 6;
        cfg.optimize_extrinsics = true;
        cfg.use_depth = true;
        TrainResult a = train(ds, target, cfg);
        TrainResult b = train(ds, target, cfg);
        REQUIRE(a.field.params == b.field.params);
        REQUIRE(a.report.trace.size() == b.report.trace.size());
        for (size_t i = 0; i < a.report.trace.size(); ++i) {
            REQUIRE(a.report.trace[i].loss_rgb == b.report.trace[i].loss_rgb);
            REQUIRE(a.report.trace[i].loss_depth == b.report.trace[i].loss_depth);
        }
        for (size_t i = 0; i < ds.frames.size(); ++i) {
            CHECK(a.report.final_poses[i].rotation.w == b.report.final_poses[i].rotation.w);
            CHECK(a.report.final_poses[i].translation.z == b.report.final_poses[i].translation.z);
        }

        cfg.seed = 99;
        TrainResult c = train(ds, target, cfg);
        CHECK(c.field.params != a.field.params);
    }

    SUBCASE("pose learning rate decays geometrically from start to end") {
        TrainConfig cfg = unit_train_config();
        cfg.n_steps = 10;
        TrainResult r = train(ds, target, cfg);
        REQUIRE(r.report.trace.size() == 10);
        CHECK(r.report.trace.front().pose_lr == doctest::Approx(3.3e-4).epsilon(1e-6));
        CHECK(r.report.trace.back().pose_lr == doctest::Approx(1e-5).epsilon(1e-6));
        double ratio = std::pow(1e-5 / 3.3e-4, 1.0 / 9.0);
        for (int k = 0; k + 1 < 10; ++k)
            CHECK(r.report.trace[k + 1].pose_lr / r.report.trace[k].pose_lr ==
                  doctest::Approx(ratio).epsilon(1e-5));

        std::string csv = trace_csv(r.report);
        CHECK(csv.rfind("step,loss_rgb,loss_depth,pose_lr\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    }
}

TEST_CASE("garbling masked pixels' colors and depths changes nothing") {
    Rng rng(31);
    TrajectorySpec spec;
    spec.n_views = 4;
    SceneDataset ds = make_dataset(four_objects_scene(), default_intrinsics(48, 36), spec, rng);
    const ObjectSpec* cup = ds.find_object(4);
    REQUIRE(cup != nullptr);
    RayIndex index = build_ray_index(ds, *cup);
    REQUIRE(!index.masked.empty());

    SceneDataset garbled = ds;
    for (const ClassifiedPixel& p : index.masked) {
        Frame& f = garbled.frames[p.frame];
        f.rgb.at(p.u, p.v, 0) = 13;
        f.rgb.at(p.u, p.v, 1) = 250;
        f.rgb.at(p.u, p.v, 2) = 77;
        f.depth.at(p.u, p.v) = 9.9f;
    }

    TrainConfig cfg = unit_train_config();
    cfg.n_steps = 3;
    cfg.use_depth = true;
    TrainResult a = train(ds, *cup, cfg);
    TrainResult b = train(garbled, *cup, cfg);
    REQUIRE(a.field.params == b.field.params);
    for (size_t i = 0; i < a.report.trace.size(); ++i) {
        REQUIRE(a.report.trace[i].loss_rgb == b.report.trace[i].loss_rgb);
        REQUIRE(a.report.trace[i].loss_depth == b.report.trace[i].loss_depth);
    }
}

TEST_CASE("loss decreases over training on the ideal sphere scene") {
    Rng rng(41);
    TrajectorySpec spec;
    spec.n_views = 8;
    SceneDataset ds = make_dataset(sphere_scene(), default_intrinsics(64, 48), spec, rng);

    TrainConfig cfg;
    cfg.n_steps = 200;
    cfg.rays_per_batch = 192;
    cfg.n_samples_per_ray = 32;
    cfg.use_depth = true;
    cfg.field = unit_grid();
    cfg.field.n_levels = 4;
    cfg.field.finest_resolution = 32;
    TrainResult r = train(ds, ds.objects[0], cfg);

    auto window_mean = [&](int begin, int end) {
        double s = 0;
        for (int i = begin; i < end; ++i) s += total_loss(r.report.trace[i], cfg.w_depth);
        return s / (end - begin);
    };
    double early = window_mean(0, 20);
    double late = window_mean(180, 200);
    CHECK(late < early);
    CHECK(late < 0.5 * early); // not just noise: a real descent
    for (const StepRecord& s : r.report.trace) REQUIRE(std::isfinite(total_loss(s, cfg.w_depth)));
}

} // TEST_SUITE
