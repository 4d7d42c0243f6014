#include "objnerf/synthscene.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "objnerf/threadpool.hpp"
#include "objnerf/volrender.hpp"

namespace objnerf {

using nlohmann::json;

Vec3d Texture::sample(const Vec3d& p) const {
    switch (kind) {
        case Uniform: return color_a;
        case Checker: {
            long long s = (long long)std::floor(p.x / period) +
                          (long long)std::floor(p.y / period) +
                          (long long)std::floor(p.z / period);
            return (s & 1) ? color_b : color_a;
        }
        case Stripe: {
            long long s = (long long)std::floor(p.x / period);
            return (s & 1) ? color_b : color_a;
        }
    }
    return color_a;
}

Box3d Primitive::bounds() const {
    switch (shape) {
        case Sphere:
            return {center - Vec3d{radius, radius, radius}, center + Vec3d{radius, radius, radius}};
        case Box: return {box_min, box_max};
        case Cylinder: {
            Vec3d a = normalized(axis);
            Vec3d top = base + a * height;
            // conservative: endpoint box inflated by the radius on all axes
            Box3d b{cwise_min(base, top), cwise_max(base, top)};
            Vec3d r{radius, radius, radius};
            return {b.min - r, b.max + r};
        }
    }
    return {};
}

Pose look_at(const Vec3d& eye, const Vec3d& target) {
    Vec3d z = normalized(target - eye); // optical axis
    Vec3d up{0, 0, 1};
    Vec3d xc = cross(z, up);
    if (norm(xc) < 1e-9) xc = cross(z, Vec3d{0, 1, 0}); // top-down view
    xc = normalized(xc);
    Vec3d yc = cross(z, xc); // image-down axis
    Quatd q = Quatd::from_matrix({xc.x, yc.x, z.x, xc.y, yc.y, z.y, xc.z, yc.z, z.z});
    return {q, eye};
}

std::vector<Pose> sample_trajectory(const TrajectorySpec& spec, Rng& rng) {
    if (spec.radius <= 0 || spec.n_views < 1) throw std::runtime_error("invalid trajectory");
    std::vector<Pose> poses;
    poses.reserve(spec.n_views);
    constexpr double kTau = 6.283185307179586476925287;
    constexpr double kGolden = 0.6180339887498949; // fractional golden ratio

    for (int i = 0; i < spec.n_views; ++i) {
        double u = (i + 0.5) / spec.n_views;
        double azimuth, z;
        if (spec.kind == TrajectorySpec::Hemisphere) {
            double z_lo = std::sin(spec.min_elevation);
            double frac = u + rng.uniform(-0.4, 0.4) / spec.n_views;
            frac = std::min(std::max(frac, 0.0), 1.0);
            z = z_lo + (0.995 - z_lo) * frac;
            azimuth = kTau * (std::fmod(kGolden * i, 1.0) + rng.uniform(-0.03, 0.03));
        } else {
            double elev = spec.arc_elevation + spec.elevation_range * (u - 0.5);
            z = std::sin(elev);
            azimuth = kTau * 0.8 * u + rng.uniform(-0.01, 0.01);
        }
        double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3d offset{rxy * std::cos(azimuth), rxy * std::sin(azimuth), z};
        poses.push_back(look_at(spec.center + offset * spec.radius, spec.center));
    }
    return poses;
}

namespace {

constexpr double kHitEps = 1e-9;

struct RawHit {
    double t;
    Vec3d normal;
    const Primitive* prim;
};

bool closer(const std::optional<RawHit>& h, double t) { return !h || t < h->t; }

std::optional<double> hit_sphere(const Primitive& p, const Vec3d& o, const Vec3d& d,
                                 Vec3d* normal) {
    Vec3d oc = o - p.center;
    double b = dot(oc, d);
    double c = dot(oc, oc) - p.radius * p.radius;
    double disc = b * b - c;
    if (disc < 0) return std::nullopt;
    double s = std::sqrt(disc);
    double t = -b - s;
    if (t <= kHitEps) t = -b + s;
    if (t <= kHitEps) return std::nullopt;
    *normal = normalized(o + d * t - p.center);
    return t;
}

std::optional<double> hit_box(const Primitive& p, const Vec3d& o, const Vec3d& d, Vec3d* normal) {
    double t0 = -1e300, t1 = 1e300;
    int axis0 = 0, axis1 = 0;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (o[a] < p.box_min[a] || o[a] > p.box_max[a]) return std::nullopt;
            continue;
        }
        double ta = (p.box_min[a] - o[a]) / d[a];
        double tb = (p.box_max[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta, axis0 = a;
        if (tb < t1) t1 = tb, axis1 = a;
    }
    if (t1 < t0) return std::nullopt;
    double t = t0 > kHitEps ? t0 : t1;
    int axis = t0 > kHitEps ? axis0 : axis1;
    if (t <= kHitEps) return std::nullopt;
    Vec3d n{0, 0, 0};
    Vec3d hit = o + d * t;
    n[axis] = hit[axis] > (p.box_min[axis] + p.box_max[axis]) * 0.5 ? 1.0 : -1.0;
    *normal = n;
    return t;
}

std::optional<double> hit_cylinder(const Primitive& p, const Vec3d& o, const Vec3d& d,
                                   Vec3d* normal) {
    Vec3d ax = normalized(p.axis);
    Vec3d delta = o - p.base;
    double d_ax = dot(d, ax), delta_ax = dot(delta, ax);
    Vec3d d_perp = d - ax * d_ax;
    Vec3d delta_perp = delta - ax * delta_ax;

    double best = 1e300;
    Vec3d best_n{0, 0, 1};

    // lateral surface
    double a = dot(d_perp, d_perp);
    if (a > 1e-15) {
        double b = dot(delta_perp, d_perp);
        double c = dot(delta_perp, delta_perp) - p.radius * p.radius;
        double disc = b * b - a * c;
        if (disc >= 0) {
            double s = std::sqrt(disc);
            for (double t : {(-b - s) / a, (-b + s) / a}) {
                if (t <= kHitEps || t >= best) continue;
                double axial = delta_ax + t * d_ax;
                if (axial < 0 || axial > p.height) continue;
                best = t;
                Vec3d hit = o + d * t;
                best_n = normalized(hit - p.base - ax * axial);
            }
        }
    }
    // caps
    if (std::abs(d_ax) > 1e-15) {
        for (double plane : {0.0, p.height}) {
            double t = (plane - delta_ax) / d_ax;
            if (t <= kHitEps || t >= best) continue;
            Vec3d radial = delta_perp + d_perp * t;
            if (dot(radial, radial) > p.radius * p.radius) continue;
            best = t;
            best_n = plane == 0.0 ? -ax : ax;
        }
    }
    if (best >= 1e300) return std::nullopt;
    *normal = best_n;
    return best;
}

} // namespace

std::optional<SurfaceHit> trace_scene(const SceneDescription& scene, const Vec3d& origin,
                                      const Vec3d& dir) {
    std::optional<RawHit> hit;
    for (const Primitive& p : scene.primitives) {
        Vec3d n;
        std::optional<double> t;
        switch (p.shape) {
            case Primitive::Sphere: t = hit_sphere(p, origin, dir, &n); break;
            case Primitive::Box: t = hit_box(p, origin, dir, &n); break;
            case Primitive::Cylinder: t = hit_cylinder(p, origin, dir, &n); break;
        }
        if (t && closer(hit, *t)) hit = RawHit{*t, n, &p};
    }

    const Texture* table_tex = nullptr;
    if (scene.has_table && std::abs(dir.z) > 1e-15) {
        double t = (scene.table_height - origin.z) / dir.z;
        if (t > kHitEps && closer(hit, t)) {
            hit = RawHit{t, {0, 0, dir.z > 0 ? -1.0 : 1.0}, nullptr};
            table_tex = &scene.table_albedo;
        }
    }
    if (!hit) return std::nullopt;

    Vec3d p = origin + dir * hit->t;
    const Texture& tex = hit->prim ? hit->prim->albedo : *table_tex;
    Vec3d albedo = tex.sample(p);
    double diffuse = std::max(0.0, dot(hit->normal, -normalized(scene.light.dir)));
    double shade = scene.light.ambient + (1.0 - scene.light.ambient) * diffuse;
    Vec3d color = albedo * shade;

    SurfaceHit out;
    out.t = hit->t;
    out.normal = hit->normal;
    out.color = cwise_min(Vec3d{1, 1, 1}, cwise_max(Vec3d{0, 0, 0}, color));
    out.object_id = hit->prim ? hit->prim->object_id : 0;
    return out;
}

Frame render_ground_truth(const SceneDescription& scene, const CameraIntrinsics& intr,
                          const Pose& pose) {
    intr.validate();
    Frame frame;
    frame.rgb = ImageU8(intr.width, intr.height, 3);
    frame.depth = ImageF(intr.width, intr.height, 1);
    frame.mask = ImageU8(intr.width, intr.height, 1);
    frame.pose = pose;

    parallel_chunks(intr.height, 8, [&](int, int64_t y0, int64_t y1) {
        for (int v = int(y0); v < int(y1); ++v)
            for (int u = 0; u < intr.width; ++u) {
                Rayd ray = pixel_ray(intr, pose, u, v);
                auto hit = trace_scene(scene, ray.origin, ray.dir);
                Vec3d color = hit ? hit->color : scene.background;
                for (int c = 0; c < 3; ++c)
                    frame.rgb.at(u, v, c) = uint8_t(std::lround(color[c] * 255.0));
                frame.depth.at(u, v) = hit ? float(hit->t) : 0.0f;
                frame.mask.at(u, v) = hit ? uint8_t(hit->object_id) : 0;
            }
    });
    return frame;
}

SceneDataset make_dataset(const SceneDescription& scene, const CameraIntrinsics& intr,
                          const TrajectorySpec& trajectory, Rng& rng, double looseness) {
    SceneDataset ds;
    ds.intrinsics = intr;
    for (const Pose& pose : sample_trajectory(trajectory, rng))
        ds.frames.push_back(render_ground_truth(scene, intr, pose));

    for (const Primitive& p : scene.primitives) {
        if (p.object_id == 0) continue;
        ObjectSpec* spec = nullptr;
        for (ObjectSpec& o : ds.objects)
            if (o.id == p.object_id) spec = &o;
        Box3d b = p.bounds();
        if (spec) {
            Box3d merged{cwise_min(spec->aabb_min, b.min), cwise_max(spec->aabb_max, b.max)};
            spec->aabb_min = merged.min;
            spec->aabb_max = merged.max;
        } else {
            ds.objects.push_back(
                {p.object_id, p.name.empty() ? "object" + std::to_string(p.object_id) : p.name,
                 b.min, b.max});
        }
    }
    for (ObjectSpec& o : ds.objects) {
        Box3d loose = Box3d{o.aabb_min, o.aabb_max}.inflated(looseness);
        o.aabb_min = loose.min;
        o.aabb_max = loose.max;
    }
    ds.validate();
    return ds;
}

CameraIntrinsics default_intrinsics(int width, int height) {
    return {width, height, double(width), double(width), width / 2.0, height / 2.0};
}

SceneDescription four_objects_scene() {
    SceneDescription s;
    s.table_albedo = {Texture::Checker, {0.75, 0.70, 0.62}, {0.55, 0.52, 0.46}, 0.05};

    Primitive ball;
    ball.shape = Primitive::Sphere;
    ball.center = {0.12, 0.10, 0.04};
    ball.radius = 0.04;
    ball.object_id = 1;
    ball.name = "ball";
    ball.albedo = {Texture::Checker, {0.85, 0.15, 0.12}, {0.95, 0.55, 0.10}, 0.02};

    Primitive book;
    book.shape = Primitive::Box;
    book.box_min = {-0.25, -0.02, 0.0};
    book.box_max = {-0.05, 0.13, 0.03};
    book.object_id = 2;
    book.name = "book";
    book.albedo = {Texture::Stripe, {0.12, 0.25, 0.75}, {0.92, 0.92, 0.95}, 0.03};

    Primitive laptop;
    laptop.shape = Primitive::Box;
    laptop.box_min = {-0.10, -0.25, 0.0};
    laptop.box_max = {0.15, -0.07, 0.012};
    laptop.object_id = 3;
    laptop.name = "laptop";
    laptop.albedo = {Texture::Checker, {0.25, 0.25, 0.28}, {0.55, 0.57, 0.60}, 0.025};

    Primitive cup;
    cup.shape = Primitive::Cylinder;
    cup.base = {-0.16, -0.14, 0.0};
    cup.axis = {0, 0, 1};
    cup.radius = 0.035;
    cup.height = 0.09;
    cup.object_id = 4;
    cup.name = "cup";
    cup.albedo = {Texture::Checker, {0.10, 0.55, 0.20}, {0.90, 0.85, 0.20}, 0.02};

    s.primitives = {ball, book, laptop, cup};
    return s;
}

SceneDescription sphere_scene() {
    SceneDescription s;
    s.table_albedo = {Texture::Checker, {0.75, 0.70, 0.62}, {0.55, 0.52, 0.46}, 0.05};
    Primitive ball;
    ball.shape = Primitive::Sphere;
    ball.center = {0.0, 0.0, 0.05};
    ball.radius = 0.05;
    ball.object_id = 1;
    ball.name = "ball";
    ball.albedo = {Texture::Checker, {0.85, 0.15, 0.12}, {0.95, 0.55, 0.10}, 0.02};
    s.primitives = {ball};
    return s;
}

namespace {

json vec_to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

Vec3d vec_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

json texture_to_json(const Texture& t) {
    const char* kinds[] = {"uniform", "checker", "stripe"};
    return {{"kind", kinds[t.kind]},
            {"a", vec_to_json(t.color_a)},
            {"b", vec_to_json(t.color_b)},
            {"period", t.period}};
}

Texture texture_from_json(const json& j) {
    Texture t;
    std::string kind = j.value("kind", "uniform");
    if (kind == "checker") t.kind = Texture::Checker;
    else if (kind == "stripe") t.kind = Texture::Stripe;
    else if (kind == "uniform") t.kind = Texture::Uniform;
    else throw std::runtime_error("unknown texture kind: " + kind);
    if (j.contains("a")) t.color_a = vec_from_json(j["a"]);
    if (j.contains("b")) t.color_b = vec_from_json(j["b"]);
    t.period = j.value("period", 0.02);
    return t;
}

} // namespace

std::string scene_to_json(const SceneDescription& s) {
    json j;
    j["light"] = {{"dir", vec_to_json(s.light.dir)}, {"ambient", s.light.ambient}};
    j["background"] = vec_to_json(s.background);
    if (s.has_table)
        j["table"] = {{"height", s.table_height}, {"texture", texture_to_json(s.table_albedo)}};
    j["primitives"] = json::array();
    for (const Primitive& p : s.primitives) {
        json pj;
        pj["id"] = p.object_id;
        pj["name"] = p.name;
        pj["texture"] = texture_to_json(p.albedo);
        switch (p.shape) {
            case Primitive::Sphere:
                pj["shape"] = "sphere";
                pj["center"] = vec_to_json(p.center);
                pj["radius"] = p.radius;
                break;
            case Primitive::Box:
                pj["shape"] = "box";
                pj["min"] = vec_to_json(p.box_min);
                pj["max"] = vec_to_json(p.box_max);
                break;
            case Primitive::Cylinder:
                pj["shape"] = "cylinder";
                pj["base"] = vec_to_json(p.base);
                pj["axis"] = vec_to_json(p.axis);
                pj["radius"] = p.radius;
                pj["height"] = p.height;
                break;
        }
        j["primitives"].push_back(pj);
    }
    return j.dump(2);
}

SceneDescription scene_from_json(const std::string& text) {
    json j = json::parse(text);
    SceneDescription s;
    if (j.contains("light")) {
        s.light.dir = vec_from_json(j["light"].at("dir"));
        s.light.ambient = j["light"].value("ambient", 0.35);
    }
    if (j.contains("background")) s.background = vec_from_json(j["background"]);
    s.has_table = j.contains("table");
    if (s.has_table) {
        s.table_height = j["table"].value("height", 0.0);
        if (j["table"].contains("texture"))
            s.table_albedo = texture_from_json(j["table"]["texture"]);
    }
    for (const json& pj : j.at("primitives")) {
        Primitive p;
        std::string shape = pj.at("shape");
        if (shape == "sphere") {
            p.shape = Primitive::Sphere;
            p.center = vec_from_json(pj.at("center"));
            p.radius = pj.at("radius");
        } else if (shape == "box") {
            p.shape = Primitive::Box;
            p.box_min = vec_from_json(pj.at("min"));
            p.box_max = vec_from_json(pj.at("max"));
        } else if (shape == "cylinder") {
            p.shape = Primitive::Cylinder;
            p.base = vec_from_json(pj.at("base"));
            if (pj.contains("axis")) p.axis = vec_from_json(pj.at("axis"));
            p.radius = pj.at("radius");
            p.height = pj.at("height");
        } else {
            throw std::runtime_error("unknown primitive shape: " + shape);
        }
        p.object_id = pj.value("id", 0);
        p.name = pj.value("name", "");
        if (pj.contains("texture")) p.albedo = texture_from_json(pj["texture"]);
        s.primitives.push_back(p);
    }
    return s;
}

SceneDescription load_scene(const std::string& name_or_path) {
    if (name_or_path == "four_objects") return four_objects_scene();
    if (name_or_path == "sphere") return sphere_scene();
    std::ifstream in(name_or_path);
    if (!in) throw std::runtime_error("scene not found: " + name_or_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scene_from_json(text);
}

} // namespace objnerf
