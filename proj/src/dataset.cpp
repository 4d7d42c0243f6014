#include "objnerf/dataset.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "objnerf/raster_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace objnerf {

void SceneDataset::validate() const {
    intrinsics.validate();
    if (frames.empty()) throw std::runtime_error("dataset has no frames");
    for (size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (o.id <= 0) throw std::runtime_error("object ids must be positive");
        if (!(o.aabb_min.x < o.aabb_max.x && o.aabb_min.y < o.aabb_max.y &&
              o.aabb_min.z < o.aabb_max.z))
            throw std::runtime_error("degenerate object aabb");
        for (size_t j = i + 1; j < objects.size(); ++j)
            if (objects[j].id == o.id) throw std::runtime_error("duplicate object id");
    }
    for (const auto& f : frames) {
        bool shapes_ok = f.rgb.width == intrinsics.width && f.rgb.height == intrinsics.height &&
                         f.rgb.channels == 3 && f.depth.width == intrinsics.width &&
                         f.depth.height == intrinsics.height && f.depth.channels == 1 &&
                         f.mask.width == intrinsics.width && f.mask.height == intrinsics.height &&
                         f.mask.channels == 1;
        if (!shapes_ok) throw std::runtime_error("inconsistent raster size");
        for (float d : f.depth.data)
            if (!(d >= 0.f)) throw std::runtime_error("negative or non-finite depth value");
        for (uint8_t id : f.mask.data)
            if (id != 0 && !find_object(id)) throw std::runtime_error("undeclared instance id");
    }
}

namespace {

std::string frame_name(const char* stem, int index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s/%04d.%s", stem, index, ext);
    return buf;
}

json vec3_to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

Vec3d vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error("manifest: expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

void save_dataset(const SceneDataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "rgb");
    fs::create_directories(fs::path(dir) / "depth");
    fs::create_directories(fs::path(dir) / "mask");

    json manifest;
    manifest["camera"] = {{"width", ds.intrinsics.width}, {"height", ds.intrinsics.height},
                          {"fx", ds.intrinsics.fx},       {"fy", ds.intrinsics.fy},
                          {"cx", ds.intrinsics.cx},       {"cy", ds.intrinsics.cy}};
    manifest["frames"] = json::array();
    for (size_t i = 0; i < ds.frames.size(); ++i) {
        const Frame& f = ds.frames[i];
        std::string rgb = frame_name("rgb", int(i), "png");
        std::string depth = frame_name("depth", int(i), "dpt");
        std::string mask = frame_name("mask", int(i), "png");
        write_png((fs::path(dir) / rgb).string(), f.rgb);
        write_dpt((fs::path(dir) / depth).string(), f.depth);
        write_png((fs::path(dir) / mask).string(), f.mask);
        auto m = f.pose.to_matrix4();
        manifest["frames"].push_back({{"rgb", rgb},
                                      {"depth", depth},
                                      {"mask", mask},
                                      {"camera_to_world", std::vector<double>(m.begin(), m.end())}});
    }
    manifest["objects"] = json::array();
    for (const auto& o : ds.objects)
        manifest["objects"].push_back({{"id", o.id},
                                       {"name", o.name},
                                       {"aabb_min", vec3_to_json(o.aabb_min)},
                                       {"aabb_max", vec3_to_json(o.aabb_max)}});

    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("short write: " + dir + "/manifest.json");
}

SceneDataset load_dataset(const std::string& dir) {
    fs::path manifest_path = fs::path(dir) / "manifest.json";
    if (!fs::exists(manifest_path)) throw std::runtime_error("manifest not found: " + manifest_path.string());
    std::ifstream in(manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("manifest parse error: ") + e.what());
    }

    SceneDataset ds;
    const json& cam = manifest.at("camera");
    ds.intrinsics = {cam.at("width").get<int>(), cam.at("height").get<int>(),
                     cam.at("fx").get<double>(),  cam.at("fy").get<double>(),
                     cam.at("cx").get<double>(),  cam.at("cy").get<double>()};

    for (const auto& jo : manifest.at("objects")) {
        ObjectSpec o;
        o.id = jo.at("id").get<int>();
        o.name = jo.value("name", std::string{});
        o.aabb_min = vec3_from_json(jo.at("aabb_min"));
        o.aabb_max = vec3_from_json(jo.at("aabb_max"));
        ds.objects.push_back(std::move(o));
    }

    for (const auto& jf : manifest.at("frames")) {
        Frame f;
        f.rgb = read_png((fs::path(dir) / jf.at("rgb").get<std::string>()).string());
        f.depth = read_dpt((fs::path(dir) / jf.at("depth").get<std::string>()).string());
        f.mask = read_png((fs::path(dir) / jf.at("mask").get<std::string>()).string());
        auto mat = jf.at("camera_to_world").get<std::vector<double>>();
        if (mat.size() != 16) throw std::runtime_error("manifest: camera_to_world must hold 16 numbers");
        std::array<double, 16> m;
        std::copy(mat.begin(), mat.end(), m.begin());
        f.pose = Pose::from_matrix4(m);
        ds.frames.push_back(std::move(f));
    }

    ds.validate();
    return ds;
}

} // namespace objnerf
