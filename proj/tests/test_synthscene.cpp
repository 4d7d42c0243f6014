#include <doctest.h>

#include <objnerf/synthscene.hpp>
#include <objnerf/volrender.hpp>

#include <cmath>

using namespace objnerf;

namespace {

Vec3d optical_axis(const Pose& p) { return p.rotation.rotate(Vec3d{0, 0, 1}); }

} // namespace

TEST_SUITE("synthscene") {

TEST_CASE("sample_trajectory: radius, aim, elevation") {
    Rng rng(1);

    SUBCASE("single hemisphere view looks at the center from the radius") {
        TrajectorySpec spec;
        spec.n_views = 1;
        spec.radius = 0.6;
        spec.center = {0.1, -0.2, 0.0};
        auto poses = sample_trajectory(spec, rng);
        REQUIRE(poses.size() == 1);
        Vec3d to_center = spec.center - poses[0].translation;
        CHECK(norm(to_center) == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(norm(to_center - optical_axis(poses[0]) * norm(to_center)) < 1e-9);
    }

    SUBCASE("100 views all sit on the 0.6 m sphere, axes through the center") {
        TrajectorySpec spec;
        spec.n_views = 100;
        spec.radius = 0.6;
        spec.center = {0, 0, 0};
        auto poses = sample_trajectory(spec, rng);
        REQUIRE(poses.size() == 100);
        for (const Pose& p : poses) {
            Vec3d to_center = spec.center - p.translation;
            CHECK(std::abs(norm(to_center) - 0.6) < 1e-9);
            CHECK(norm(to_center - optical_axis(p) * norm(to_center)) < 1e-9);
            CHECK(p.translation.z > 0.0); // upper hemisphere
        }
    }

    SUBCASE("flat arc keeps the camera height constant") {
        TrajectorySpec spec;
        spec.kind = TrajectorySpec::Arc;
        spec.n_views = 12;
        spec.elevation_range = 0.0;
        auto poses = sample_trajectory(spec, rng);
        for (const Pose& p : poses)
            CHECK(p.translation.z == doctest::Approx(poses[0].translation.z).epsilon(1e-12));
    }

    SUBCASE("deterministic under the same seed") {
        TrajectorySpec spec;
        spec.n_views = 8;
        Rng a(7), b(7);
        auto pa = sample_trajectory(spec, a);
        auto pb = sample_trajectory(spec, b);
        for (int i = 0; i < 8; ++i) {
            CHECK(pa[i].translation.x == pb[i].translation.x);
            CHECK(pa[i].rotation.w == pb[i].rotation.w);
        }
        CHECK_THROWS(sample_trajectory(TrajectorySpec{.radius = -1}, a));
    }
}

TEST_CASE("render_ground_truth: plane depth, misses, sphere closed form") {
    CameraIntrinsics intr = default_intrinsics(32, 24);
    CHECK(intr.fx == 32.0);
    CHECK(intr.fy == 32.0);
    CHECK(intr.cx == 16.0);
    CHECK(intr.cy == 12.0);

    // half-integer principal point puts pixel (16, 12) exactly on-axis
    CameraIntrinsics axial{32, 24, 32, 32, 16.5, 12.5};

    SUBCASE("straight-down principal pixel sees the table at 1 m") {
        SceneDescription scene;
        scene.primitives.clear();
        Pose down = look_at({0, 0, 1.0}, {0, 0, 0});
        Frame f = render_ground_truth(scene, axial, down);
        CHECK(f.depth.at(16, 12) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(f.mask.at(16, 12) == 0);
    }

    SUBCASE("rays missing everything: zero depth, zero mask, background color") {
        SceneDescription scene;
        scene.has_table = false;
        scene.background = {0.12, 0.13, 0.15};
        Frame f = render_ground_truth(scene, intr, look_at({0, 0, 1.0}, {0, 0, 0}));
        for (int v = 0; v < intr.height; ++v)
            for (int u = 0; u < intr.width; ++u) {
                REQUIRE(f.depth.at(u, v) == 0.0f);
                REQUIRE(f.mask.at(u, v) == 0);
                REQUIRE(f.rgb.at(u, v, 0) == uint8_t(std::lround(0.12 * 255)));
                REQUIRE(f.rgb.at(u, v, 1) == uint8_t(std::lround(0.13 * 255)));
                REQUIRE(f.rgb.at(u, v, 2) == uint8_t(std::lround(0.15 * 255)));
            }
    }

    SUBCASE("on-axis sphere depth equals distance minus radius, ray-march checked") {
        SceneDescription scene;
        scene.has_table = false;
        Primitive s;
        s.shape = Primitive::Sphere;
        s.center = {0, 0, 0.3};
        s.radius = 0.1;
        s.object_id = 1;
        s.name = "probe";
        scene.primitives = {s};

        Vec3d eye{0, 0, 1.0};
        Pose pose = look_at(eye, s.center);
        Frame f = render_ground_truth(scene, axial, pose);
        double got = f.depth.at(16, 12);
        double want = norm(eye - s.center) - s.radius; // 0.6
        CHECK(got == doctest::Approx(want).epsilon(1e-6));

        // brute-force ray march down the optical axis
        Vec3d d = optical_axis(pose);
        double march = 0;
        const int n = 1000000;
        for (int i = 0; i <= n; ++i) {
            double t = 0.01 + (2.0 - 0.01) * i / n;
            if (norm(eye + d * t - s.center) <= s.radius) {
                march = t;
                break;
            }
        }
        REQUIRE(march > 0);
        CHECK(std::abs(march - got) < 1e-4);
    }
}

TEST_CASE("make_dataset: shapes, loose boxes, unprojection containment") {
    SUBCASE("30-view hemisphere of the single-ball scene") {
        Rng rng(3);
        TrajectorySpec spec;
        spec.n_views = 30;
        SceneDataset ds = make_dataset(sphere_scene(), default_intrinsics(24, 18), spec, rng);
        CHECK(ds.frames.size() == 30);
        REQUIRE(ds.objects.size() == 1);
        CHECK(ds.objects[0].name == "ball");
    }

    SUBCASE("looseness 1.25 inflates a unit box about its center") {
        SceneDescription scene;
        Primitive b;
        b.shape = Primitive::Box;
        b.box_min = {0, 0, 0};
        b.box_max = {1, 1, 1};
        b.object_id = 1;
        b.name = "crate";
        scene.primitives = {b};
        Rng rng(4);
        TrajectorySpec spec;
        spec.n_views = 1;
        spec.radius = 3.0;
        SceneDataset ds = make_dataset(scene, default_intrinsics(8, 8), spec, rng, 1.25);
        Box3d box = ds.objects[0].aabb();
        CHECK(box.min.x == doctest::Approx(-0.125).epsilon(1e-12));
        CHECK(box.max.y == doctest::Approx(1.125).epsilon(1e-12));
        CHECK(norm(box.extent() - Vec3d{1.25, 1.25, 1.25}) < 1e-12);
        CHECK(norm((box.min + box.max) * 0.5 - Vec3d{0.5, 0.5, 0.5}) < 1e-12);
    }

    SUBCASE("every masked pixel unprojects into its object's loose box") {
        Rng rng(5);
        TrajectorySpec spec;
        spec.n_views = 2;
        CameraIntrinsics intr = default_intrinsics(64, 48);
        SceneDataset ds = make_dataset(four_objects_scene(), intr, spec, rng);
        const Frame& f = ds.frames[0];
        int checked = 0;
        for (int v = 0; v < intr.height; ++v)
            for (int u = 0; u < intr.width; ++u) {
                int id = f.mask.at(u, v);
                if (id == 0) continue;
                const ObjectSpec* obj = ds.find_object(id);
                REQUIRE(obj != nullptr);
                Rayd ray = pixel_ray(intr, f.pose, u, v);
                Vec3d p = ray.at(double(f.depth.at(u, v)));
                REQUIRE(obj->aabb().contains(p));
                ++checked;
            }
        CHECK(checked > 100); // the objects are actually visible
    }
}

TEST_CASE("multi-view consistency of depth and masks") {
    Rng rng(11);
    TrajectorySpec spec;
    spec.n_views = 3;
    CameraIntrinsics intr = default_intrinsics(64, 48);
    SceneDataset ds = make_dataset(four_objects_scene(), intr, spec, rng);

    const Frame& a = ds.frames[0];
    const Frame& b = ds.frames[2];
    Pose b_inv = pose_inverse(b.pose);
    int checked = 0, failed = 0;
    for (int v = 0; v < intr.height; ++v)
        for (int u = 0; u < intr.width; ++u) {
            int id = a.mask.at(u, v);
            if (id == 0) continue;
            Rayd ray = pixel_ray(intr, a.pose, u, v);
            Vec3d p = ray.at(double(a.depth.at(u, v)));

            Vec3d q = pose_apply(b_inv, p); // camera frame of b
            if (q.z < 0.05) continue;
            int bu = int(std::lround(q.x / q.z * intr.fx + intr.cx - 0.5));
            int bv = int(std::lround(q.y / q.z * intr.fy + intr.cy - 0.5));
            if (bu < 1 || bv < 1 || bu >= intr.width - 1 || bv >= intr.height - 1) continue;
            double dist = norm(p - b.pose.translation);
            ++checked;

            // pass if some pixel in the 3x3 neighborhood (1 px tolerance)
            // either sees the same surface with a matching id or is closer
            // (occluded)
            bool ok = false;
            for (int dv = -1; dv <= 1 && !ok; ++dv)
                for (int du = -1; du <= 1 && !ok; ++du) {
                    double bd = b.depth.at(bu + du, bv + dv);
                    int bid = b.mask.at(bu + du, bv + dv);
                    if (bd > 0 && bd < dist - 1e-3) ok = true; // occluder in front
                    else if (std::abs(bd - dist) <= 1e-3 && bid == id) ok = true;
                }
            if (!ok) ++failed;
        }
    CHECK(checked > 200);
    CHECK(failed == 0);
}

TEST_CASE("depth values are zero or beyond the near limit; rendering is deterministic") {
    Rng rng(13);
    TrajectorySpec spec;
    spec.n_views = 2;
    CameraIntrinsics intr = default_intrinsics(48, 36);
    SceneDataset ds = make_dataset(four_objects_scene(), intr, spec, rng);
    for (const Frame& f : ds.frames)
        for (float d : f.depth.data) REQUIRE((d == 0.0f || d >= 0.01f));

    Rng rng2(13);
    SceneDataset ds2 = make_dataset(four_objects_scene(), intr, spec, rng2);
    for (size_t i = 0; i < ds.frames.size(); ++i) {
        REQUIRE(ds.frames[i].rgb.data == ds2.frames[i].rgb.data);
        REQUIRE(ds.frames[i].depth.data == ds2.frames[i].depth.data);
        REQUIRE(ds.frames[i].mask.data == ds2.frames[i].mask.data);
    }
}

TEST_CASE("textures: checker flips with period, stripe varies along x only") {
    Texture t;
    t.kind = Texture::Checker;
    t.color_a = {1, 0, 0};
    t.color_b = {0, 1, 0};
    t.period = 0.02;
    Vec3d p{0.001, 0.001, 0.001};
    Vec3d c0 = t.sample(p);
    CHECK(norm(c0 - t.sample(p + Vec3d{0.02, 0, 0})) > 0.5);  // parity flip
    CHECK(norm(c0 - t.sample(p + Vec3d{0.02, 0.02, 0})) < 1e-12);

    t.kind = Texture::Stripe;
    c0 = t.sample(p);
    CHECK(norm(c0 - t.sample(p + Vec3d{0.02, 0, 0})) > 0.5);
    CHECK(norm(c0 - t.sample(p + Vec3d{0, 0.5, 0.5})) < 1e-12);

    t.kind = Texture::Uniform;
    CHECK(norm(t.sample(p) - t.color_a) == 0.0);
}

TEST_CASE("scene JSON round trip renders identically") {
    SceneDescription scene = four_objects_scene();
    std::string text = scene_to_json(scene);
    SceneDescription back = scene_from_json(text);

    CameraIntrinsics intr = default_intrinsics(40, 30);
    Pose pose = look_at({0.5, 0.4, 0.5}, {0, 0, 0});
    Frame fa = render_ground_truth(scene, intr, pose);
    Frame fb = render_ground_truth(back, intr, pose);
    REQUIRE(fa.rgb.data == fb.rgb.data);
    REQUIRE(fa.depth.data == fb.depth.data);
    REQUIRE(fa.mask.data == fb.mask.data);

    CHECK(load_scene("four_objects").primitives.size() == scene.primitives.size());
    CHECK(load_scene("sphere").primitives.size() == 1);
    CHECK_THROWS(load_scene("/nonexistent/scene.json"));
}

} // TEST_SUITE
