#include "objnerf/hashfield.hpp"

#include <cstring>

#include "objnerf/raster_io.hpp"

namespace objnerf {

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(uint8_t(v));
    b.push_back(uint8_t(v >> 8));
    b.push_back(uint8_t(v >> 16));
    b.push_back(uint8_t(v >> 24));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
    put_u32(b, uint32_t(v));
    put_u32(b, uint32_t(v >> 32));
}

void put_f32(std::vector<uint8_t>& b, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(b, u);
}

void put_f64(std::vector<uint8_t>& b, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(b, u);
}

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;
    void need(size_t n) const {
        if (pos + n > b.size()) throw std::runtime_error("truncated checkpoint");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(b[pos]) | uint32_t(b[pos + 1]) << 8 | uint32_t(b[pos + 2]) << 16 |
                     uint32_t(b[pos + 3]) << 24;
        pos += 4;
        return v;
    }
    uint64_t u64() {
        uint64_t lo = u32();
        return lo | uint64_t(u32()) << 32;
    }
    float f32() {
        uint32_t u = u32();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }
    double f64() {
        uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
};

} // namespace

void save_checkpoint(const FieldParams<float>& fp, const std::string& path) {
    std::vector<uint8_t> b;
    b.reserve(64 + fp.params.size() * 4);
    b.push_back('O');
    b.push_back('F');
    b.push_back('P');
    b.push_back('1');
    put_u32(b, 1); // version
    const HashGridConfig& c = fp.cfg;
    put_u32(b, uint32_t(c.n_levels));
    put_u32(b, c.table_size);
    put_u32(b, uint32_t(c.features_per_entry));
    put_u32(b, uint32_t(c.base_resolution));
    put_u32(b, uint32_t(c.finest_resolution));
    put_u32(b, uint32_t(c.hidden_width));
    put_u32(b, uint32_t(c.latent_dim));
    put_u32(b, uint32_t(c.sh_degree));
    put_u32(b, c.force_hash ? 1u : 0u);
    for (int a = 0; a < 3; ++a) put_f64(b, fp.aabb.min[a]);
    for (int a = 0; a < 3; ++a) put_f64(b, fp.aabb.max[a]);
    put_u64(b, fp.params.size());
    for (float v : fp.params) put_f32(b, v);
    write_file_bytes(path, b.data(), b.size());
}

FieldParams<float> load_checkpoint(const std::string& path) {
    std::vector<uint8_t> bytes = read_file_bytes(path);
    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), "OFP1", 4) != 0)
        throw std::runtime_error("bad checkpoint magic");
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    HashGridConfig c;
    c.n_levels = int(r.u32());
    c.table_size = r.u32();
    c.features_per_entry = int(r.u32());
    c.base_resolution = int(r.u32());
    c.finest_resolution = int(r.u32());
    c.hidden_width = int(r.u32());
    c.latent_dim = int(r.u32());
    c.sh_degree = int(r.u32());
    c.force_hash = r.u32() != 0;
    Box3d aabb;
    for (int a = 0; a < 3; ++a) aabb.min[a] = r.f64();
    for (int a = 0; a < 3; ++a) aabb.max[a] = r.f64();
    uint64_t count = r.u64();
    FieldParams<float> fp = FieldParams<float>::make(c, aabb);
    if (count != fp.params.size()) throw std::runtime_error("checkpoint parameter count mismatch");
    r.need(count * 4);
    for (uint64_t i = 0; i < count; ++i) fp.params[i] = r.f32();
    return fp;
}

} // namespace objnerf
