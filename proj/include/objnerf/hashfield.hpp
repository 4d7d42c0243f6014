#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "objnerf/rng.hpp"
#include "objnerf/sh.hpp"
#include "objnerf/vec3.hpp"

namespace objnerf {

// Multiresolution hash-grid encoding plus two small MLPs. Defaults: 16
// levels, 2^19 entries, 2 features per entry, resolutions 16 -> 2048.
struct HashGridConfig {
    int n_levels = 16;
    uint32_t table_size = 1u << 19;
    int features_per_entry = 2;
    int base_resolution = 16;
    int finest_resolution = 2048;
    int hidden_width = 64; // shared by density (1 hidden) and color (2 hidden) MLPs
    int latent_dim = 15;
    int sh_degree = 4;      // 16 basis values
    bool force_hash = false; // diagnostics: hash-index even where the dense grid fits

    double growth() const {
        if (n_levels <= 1) return 1.0;
        return std::exp(std::log(double(finest_resolution) / base_resolution) / (n_levels - 1));
    }
    int level_resolution(int level) const {
        return int(std::floor(double(base_resolution) * std::pow(growth(), level) + 1e-7));
    }
    bool level_dense(int level) const {
        uint64_t n = uint64_t(level_resolution(level)) + 1;
        return !force_hash && n * n * n <= table_size;
    }
    int feature_dim() const { return n_levels * features_per_entry; }
    int sh_dim() const { return sh_degree * sh_degree; }
    int density_out() const { return 1 + latent_dim; }
    int color_in() const { return latent_dim + sh_dim(); }

    void validate() const {
        if (n_levels < 1 || features_per_entry < 1 || base_resolution < 1 ||
            finest_resolution < base_resolution || hidden_width < 1 || latent_dim < 1 ||
            sh_degree < 1 || sh_degree > 4)
            throw std::runtime_error("invalid hash grid config");
        if (table_size == 0 || (table_size & (table_size - 1)) != 0)
            throw std::runtime_error("table_size must be a power of two");
    }

    bool operator==(const HashGridConfig& o) const {
        return n_levels == o.n_levels && table_size == o.table_size &&
               features_per_entry == o.features_per_entry &&
               base_resolution == o.base_resolution && finest_resolution == o.finest_resolution &&
               hidden_width == o.hidden_width && latent_dim == o.latent_dim &&
               sh_degree == o.sh_degree && force_hash == o.force_hash;
    }
};

// Spatial hash of an integer lattice corner (same prime set as the common
// multiresolution-hash implementations).
inline uint32_t hash_corner(uint32_t x, uint32_t y, uint32_t z, uint32_t table_mask) {
    return (x ^ (y * 2654435761u) ^ (z * 805459861u)) & table_mask;
}

// Resolution and indexing mode of one grid level, precomputed once so the
// per-sample lookup stays free of pow/exp.
struct LevelSpec {
    int res = 0;
    uint32_t stride = 0; // res + 1, dense indexing pitch
    bool dense = false;
};

// All learnable state for one object field, stored as a single flat vector:
// [grid | density W1, b1, W2, b2 | color W1, b1, W2, b2, W3, b3].
template <typename S>
struct FieldParams {
    HashGridConfig cfg;
    Box3d aabb;
    std::vector<S> params;
    std::vector<LevelSpec> levels;

    size_t grid_size = 0; // grid region is params[0 .. grid_size)
    size_t dw1 = 0, db1 = 0, dw2 = 0, db2 = 0;
    size_t cw1 = 0, cb1 = 0, cw2 = 0, cb2 = 0, cw3 = 0, cb3 = 0;

    static FieldParams make(const HashGridConfig& cfg, const Box3d& aabb) {
        cfg.validate();
        if (!aabb.valid()) throw std::runtime_error("field aabb is degenerate");
        FieldParams fp;
        fp.cfg = cfg;
        fp.aabb = aabb;
        fp.levels.resize(cfg.n_levels);
        for (int l = 0; l < cfg.n_levels; ++l) {
            int res = cfg.level_resolution(l);
            fp.levels[l] = {res, uint32_t(res) + 1, cfg.level_dense(l)};
        }
        int h = cfg.hidden_width, din = cfg.feature_dim(), dout = cfg.density_out();
        int cin = cfg.color_in();
        fp.grid_size = size_t(cfg.n_levels) * cfg.table_size * cfg.features_per_entry;
        size_t off = fp.grid_size;
        fp.dw1 = off; off += size_t(h) * din;
        fp.db1 = off; off += h;
        fp.dw2 = off; off += size_t(dout) * h;
        fp.db2 = off; off += dout;
        fp.cw1 = off; off += size_t(h) * cin;
        fp.cb1 = off; off += h;
        fp.cw2 = off; off += size_t(h) * h;
        fp.cb2 = off; off += h;
        fp.cw3 = off; off += size_t(3) * h;
        fp.cb3 = off; off += 3;
        fp.params.assign(off, S(0));
        return fp;
    }

    size_t param_count() const { return params.size(); }
    size_t mlp_offset() const { return grid_size; }
    size_t mlp_count() const { return params.size() - grid_size; }

    const S* grid_level(int level) const {
        return params.data() + size_t(level) * cfg.table_size * cfg.features_per_entry;
    }
    S* grid_level(int level) {
        return params.data() + size_t(level) * cfg.table_size * cfg.features_per_entry;
    }

    // Grid features small and uniform, MLP weights fan-in-scaled uniform,
    // biases zero. Small grid init keeps the initial density near exp(0) = 1.
    void init_params(Rng& rng) {
        for (size_t i = 0; i < grid_size; ++i) params[i] = S(rng.uniform(-1e-4, 1e-4));
        auto init_linear = [&](size_t w_off, size_t b_off, int rows, int cols) {
            double bound = 1.0 / std::sqrt(double(cols));
            for (size_t i = 0; i < size_t(rows) * cols; ++i)
                params[w_off + i] = S(rng.uniform(-bound, bound));
            for (int i = 0; i < rows; ++i) params[b_off + i] = S(0);
        };
        int h = cfg.hidden_width;
        init_linear(dw1, db1, h, cfg.feature_dim());
        init_linear(dw2, db2, cfg.density_out(), h);
        init_linear(cw1, cb1, h, cfg.color_in());
        init_linear(cw2, cb2, h, h);
        init_linear(cw3, cb3, 3, h);
    }

    bool all_finite() const {
        for (S v : params)
            if (!std::isfinite(double(v))) return false;
        return true;
    }

    template <typename U>
    FieldParams<U> cast() const {
        FieldParams<U> out = FieldParams<U>::make(cfg, aabb);
        for (size_t i = 0; i < params.size(); ++i) out.params[i] = U(params[i]);
        return out;
    }
};

// Raw density activations are clamped here before exponentiation.
inline constexpr double kDensityRawClamp = 12.0;

// Per-level trilinear interpolation state, recomputed identically in the
// forward and backward passes.
template <typename S>
struct LevelLookup {
    uint32_t corner_index[8]; // table entry per corner (dx + 2*dy + 4*dz order)
    S weight[8];
    S dwx[8], dwy[8], dwz[8]; // d(weight)/d(fractional coordinate)
    S scale_x, scale_y, scale_z; // d(fractional)/d(world position)
};

// Box-normalized sample position, shared by every level of one lookup.
template <typename S>
struct NormalizedPos {
    S p01[3];     // clamped to [0, 1]
    S inv_ext[3]; // d(normalized)/d(world); zero outside the box
};

template <typename S>
NormalizedPos<S> normalize_pos(const Box3d& aabb, const Vec3<S>& pos) {
    Vec3<S> bmin = aabb.min.cast<S>();
    Vec3<S> ext = aabb.extent().cast<S>();
    NormalizedPos<S> np;
    for (int a = 0; a < 3; ++a) {
        S p = (pos[a] - bmin[a]) / ext[a];
        bool inside = p >= S(0) && p <= S(1);
        np.p01[a] = std::min(std::max(p, S(0)), S(1));
        np.inv_ext[a] = inside ? S(1) / ext[a] : S(0);
    }
    return np;
}

template <typename S>
void level_lookup(const HashGridConfig& cfg, const LevelSpec& spec, const NormalizedPos<S>& np,
                  LevelLookup<S>& out) {
    int res = spec.res;
    uint32_t mask = cfg.table_size - 1;
    bool dense = spec.dense;
    uint32_t stride = spec.stride;

    S frac[3];
    uint32_t c0[3];
    for (int a = 0; a < 3; ++a) {
        S x = np.p01[a] * S(res);
        S cell = std::floor(x);
        if (cell > S(res - 1)) cell = S(res - 1);
        c0[a] = uint32_t(cell);
        frac[a] = x - cell;
    }
    out.scale_x = S(res) * np.inv_ext[0];
    out.scale_y = S(res) * np.inv_ext[1];
    out.scale_z = S(res) * np.inv_ext[2];

    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                int k = dx + 2 * dy + 4 * dz;
                uint32_t cx = c0[0] + uint32_t(dx), cy = c0[1] + uint32_t(dy),
                         cz = c0[2] + uint32_t(dz);
                out.corner_index[k] = dense ? (cx + stride * (cy + stride * cz))
                                            : hash_corner(cx, cy, cz, mask);
                S wx = dx ? frac[0] : S(1) - frac[0];
                S wy = dy ? frac[1] : S(1) - frac[1];
                S wz = dz ? frac[2] : S(1) - frac[2];
                out.weight[k] = wx * wy * wz;
                S sx = dx ? S(1) : S(-1);
                S sy = dy ? S(1) : S(-1);
                S sz = dz ? S(1) : S(-1);
                out.dwx[k] = sx * wy * wz;
                out.dwy[k] = sy * wx * wz;
                out.dwz[k] = sz * wx * wy;
            }
}

template <typename S>
void level_lookup(const HashGridConfig& cfg, const Box3d& aabb, int level, const Vec3<S>& pos,
                  LevelLookup<S>& out) {
    int res = cfg.level_resolution(level);
    LevelSpec spec{res, uint32_t(res) + 1, cfg.level_dense(level)};
    level_lookup(cfg, spec, normalize_pos(aabb, pos), out);
}

// Concatenated per-level trilinear interpolation of corner features.
// Output: n_levels * features_per_entry values, level-major.
template <typename S>
void encode(const FieldParams<S>& fp, const Vec3<S>& pos, S* feats) {
    const HashGridConfig& cfg = fp.cfg;
    int f = cfg.features_per_entry;
    NormalizedPos<S> np = normalize_pos(fp.aabb, pos);
    LevelLookup<S> lk;
    for (int l = 0; l < cfg.n_levels; ++l) {
        level_lookup(cfg, fp.levels[l], np, lk);
        const S* table = fp.grid_level(l);
        for (int j = 0; j < f; ++j) feats[l * f + j] = S(0);
        for (int k = 0; k < 8; ++k) {
            const S* entry = table + size_t(lk.corner_index[k]) * f;
            for (int j = 0; j < f; ++j) feats[l * f + j] += lk.weight[k] * entry[j];
        }
    }
}

// Activations cached by field_forward for the matching backward pass.
// All buffers are sample-major.
template <typename S>
struct FieldCache {
    int n = 0;
    std::vector<S> feats;    // n x feature_dim
    std::vector<S> h1;       // n x hidden (density hidden, pre-activation)
    std::vector<S> draw;     // n x (1 + latent); [0] is the raw density
    std::vector<S> sh;       // n x sh_dim
    std::vector<S> g1;       // n x hidden (color hidden 1, pre-activation)
    std::vector<S> g2;       // n x hidden (color hidden 2, pre-activation)
    std::vector<S> craw;     // n x 3 (color logits)
    std::vector<S> sigma;    // n
    std::vector<S> color;    // n x 3

    void resize(int n_samples, const HashGridConfig& cfg) {
        n = n_samples;
        feats.resize(size_t(n) * cfg.feature_dim());
        h1.resize(size_t(n) * cfg.hidden_width);
        draw.resize(size_t(n) * cfg.density_out());
        sh.resize(size_t(n) * cfg.sh_dim());
        g1.resize(size_t(n) * cfg.hidden_width);
        g2.resize(size_t(n) * cfg.hidden_width);
        craw.resize(size_t(n) * 3);
        sigma.resize(size_t(n));
        color.resize(size_t(n) * 3);
    }
};

namespace detail {

// Weights are stored input-major (column c holds the fan-out of input c), so
// both passes walk contiguous spans of length `rows`.
template <typename S>
void linear_forward(const S* w, const S* b, const S* in, S* out, int rows, int cols) {
    for (int r = 0; r < rows; ++r) out[r] = b[r];
    for (int c = 0; c < cols; ++c) {
        S x = in[c];
        const S* wc = w + size_t(c) * rows;
        for (int r = 0; r < rows; ++r) out[r] += wc[r] * x;
    }
}

template <typename S>
void relu(const S* pre, S* post, int n) {
    for (int i = 0; i < n; ++i) post[i] = pre[i] > S(0) ? pre[i] : S(0);
}

// d_out -> weight/bias grads and d_in (d_in may be null). `in` is the
// post-activation input the layer saw.
template <typename S>
void linear_backward(const S* w, const S* in, const S* d_out, S* gw, S* gb, S* d_in, int rows,
                     int cols) {
    for (int r = 0; r < rows; ++r) gb[r] += d_out[r];
    for (int c = 0; c < cols; ++c) {
        S x = in[c];
        S* gwc = gw + size_t(c) * rows;
        for (int r = 0; r < rows; ++r) gwc[r] += d_out[r] * x;
    }
    if (d_in)
        for (int c = 0; c < cols; ++c) {
            const S* wc = w + size_t(c) * rows;
            S acc = S(0);
            for (int r = 0; r < rows; ++r) acc += d_out[r] * wc[r];
            d_in[c] = acc;
        }
}

} // namespace detail

// Density sigma = exp(min(raw, clamp)); color = sigmoid of the color MLP
// output whose input is the 15-dim density latent concatenated with the
// spherical-harmonics basis of the unit view direction.
template <typename S>
void field_forward(const FieldParams<S>& fp, std::span<const Vec3<S>> positions,
                   std::span<const Vec3<S>> dirs, FieldCache<S>& cache) {
    const HashGridConfig& cfg = fp.cfg;
    int n = int(positions.size());
    cache.resize(n, cfg);
    int h = cfg.hidden_width, din = cfg.feature_dim(), dout = cfg.density_out();
    int shd = cfg.sh_dim(), cin = cfg.color_in();

    thread_local std::vector<S> h1_post, cin_buf, g1_post, g2_post;
    h1_post.resize(h), cin_buf.resize(cin), g1_post.resize(h), g2_post.resize(h);
    const S* p = fp.params.data();
    for (int i = 0; i < n; ++i) {
        S* feats = cache.feats.data() + size_t(i) * din;
        encode(fp, positions[i], feats);

        S* h1 = cache.h1.data() + size_t(i) * h;
        detail::linear_forward(p + fp.dw1, p + fp.db1, feats, h1, h, din);
        detail::relu(h1, h1_post.data(), h);
        S* draw = cache.draw.data() + size_t(i) * dout;
        detail::linear_forward(p + fp.dw2, p + fp.db2, h1_post.data(), draw, dout, h);

        S raw = draw[0];
        if (!(raw == raw)) throw std::runtime_error("diverged parameters");
        cache.sigma[i] = std::exp(std::min(raw, S(kDensityRawClamp)));

        S* sh = cache.sh.data() + size_t(i) * shd;
        sh_basis(cfg.sh_degree, dirs[i], sh);
        for (int j = 0; j < cfg.latent_dim; ++j) cin_buf[j] = draw[1 + j];
        for (int j = 0; j < shd; ++j) cin_buf[cfg.latent_dim + j] = sh[j];

        S* g1 = cache.g1.data() + size_t(i) * h;
        detail::linear_forward(p + fp.cw1, p + fp.cb1, cin_buf.data(), g1, h, cin);
        detail::relu(g1, g1_post.data(), h);
        S* g2 = cache.g2.data() + size_t(i) * h;
        detail::linear_forward(p + fp.cw2, p + fp.cb2, g1_post.data(), g2, h, h);
        detail::relu(g2, g2_post.data(), h);
        S* craw = cache.craw.data() + size_t(i) * 3;
        detail::linear_forward(p + fp.cw3, p + fp.cb3, g2_post.data(), craw, 3, h);
        for (int j = 0; j < 3; ++j)
            cache.color[size_t(i) * 3 + j] = S(1) / (S(1) + std::exp(-craw[j]));
    }
}

// Reverse pass. Grid gradients go through grid_sink(flat_grid_index, value);
// MLP gradients accumulate into mlp_grads (size mlp_count(), indexed relative
// to mlp_offset()). d_positions / d_dirs may be empty to skip those outputs;
// when present they are accumulated into (callers zero them first).
template <typename S, typename GridSink>
void field_backward(const FieldParams<S>& fp, std::span<const Vec3<S>> positions,
                    std::span<const Vec3<S>> dirs, const FieldCache<S>& cache,
                    std::span<const S> d_sigma, std::span<const S> d_color3,
                    GridSink&& grid_sink, std::span<S> mlp_grads,
                    std::span<Vec3<S>> d_positions, std::span<Vec3<S>> d_dirs) {
    const HashGridConfig& cfg = fp.cfg;
    int n = int(positions.size());
    int h = cfg.hidden_width, din = cfg.feature_dim(), dout = cfg.density_out();
    int shd = cfg.sh_dim(), cin = cfg.color_in();
    int f = cfg.features_per_entry;
    const S* p = fp.params.data();
    size_t base = fp.mlp_offset();
    S* g = mlp_grads.data();

    thread_local std::vector<S> h1_post, g1_post, g2_post, cin_buf;
    thread_local std::vector<S> d_craw, d_g2, d_g1, d_cin, d_draw, d_h1, d_feats;
    h1_post.resize(h), g1_post.resize(h), g2_post.resize(h), cin_buf.resize(cin);
    d_craw.resize(3), d_g2.resize(h), d_g1.resize(h), d_cin.resize(cin), d_draw.resize(dout),
        d_h1.resize(h), d_feats.resize(din);
    LevelLookup<S> lk;

    for (int i = 0; i < n; ++i) {
        const S* feats = cache.feats.data() + size_t(i) * din;
        const S* h1 = cache.h1.data() + size_t(i) * h;
        const S* draw = cache.draw.data() + size_t(i) * dout;
        const S* sh = cache.sh.data() + size_t(i) * shd;
        const S* g1 = cache.g1.data() + size_t(i) * h;
        const S* g2 = cache.g2.data() + size_t(i) * h;
        const S* color = cache.color.data() + size_t(i) * 3;

        detail::relu(h1, h1_post.data(), h);
        detail::relu(g1, g1_post.data(), h);
        detail::relu(g2, g2_post.data(), h);
        for (int j = 0; j < cfg.latent_dim; ++j) cin_buf[j] = draw[1 + j];
        for (int j = 0; j < shd; ++j) cin_buf[cfg.latent_dim + j] = sh[j];

        // color head: sigmoid then three linear layers
        for (int j = 0; j < 3; ++j) {
            S c = color[j];
            d_craw[j] = d_color3[size_t(i) * 3 + j] * c * (S(1) - c);
        }
        detail::linear_backward(p + fp.cw3, g2_post.data(), d_craw.data(), g + (fp.cw3 - base),
                                g + (fp.cb3 - base), d_g2.data(), 3, h);
        for (int j = 0; j < h; ++j) d_g2[j] = g2[j] > S(0) ? d_g2[j] : S(0);
        detail::linear_backward(p + fp.cw2, g1_post.data(), d_g2.data(), g + (fp.cw2 - base),
                                g + (fp.cb2 - base), d_g1.data(), h, h);
        for (int j = 0; j < h; ++j) d_g1[j] = g1[j] > S(0) ? d_g1[j] : S(0);
        detail::linear_backward(p + fp.cw1, cin_buf.data(), d_g1.data(), g + (fp.cw1 - base),
                                g + (fp.cb1 - base), d_cin.data(), h, cin);

        if (!d_dirs.empty())
            sh_basis_backward(cfg.sh_degree, dirs[i], d_cin.data() + cfg.latent_dim, d_dirs[i]);

        // density head: latent grads from the color input, sigma through exp
        S raw = draw[0];
        d_draw[0] = raw < S(kDensityRawClamp) ? d_sigma[i] * cache.sigma[i] : S(0);
        for (int j = 0; j < cfg.latent_dim; ++j) d_draw[1 + j] = d_cin[j];
        detail::linear_backward(p + fp.dw2, h1_post.data(), d_draw.data(), g + (fp.dw2 - base),
                                g + (fp.db2 - base), d_h1.data(), dout, h);
        for (int j = 0; j < h; ++j) d_h1[j] = h1[j] > S(0) ? d_h1[j] : S(0);
        detail::linear_backward(p + fp.dw1, feats, d_h1.data(), g + (fp.dw1 - base),
                                g + (fp.db1 - base), d_feats.data(), h, din);

        // grid features and position
        NormalizedPos<S> np = normalize_pos(fp.aabb, positions[i]);
        for (int l = 0; l < cfg.n_levels; ++l) {
            level_lookup(cfg, fp.levels[l], np, lk);
            size_t level_base = size_t(l) * cfg.table_size * f;
            const S* table = fp.grid_level(l);
            S gpx = 0, gpy = 0, gpz = 0;
            for (int k = 0; k < 8; ++k) {
                size_t entry = size_t(lk.corner_index[k]) * f;
                S dot_feat = 0;
                for (int j = 0; j < f; ++j) {
                    S df = d_feats[l * f + j];
                    grid_sink(uint32_t(level_base + entry + j), df * lk.weight[k]);
                    dot_feat += df * table[entry + j];
                }
                gpx += dot_feat * lk.dwx[k];
                gpy += dot_feat * lk.dwy[k];
                gpz += dot_feat * lk.dwz[k];
            }
            if (!d_positions.empty()) {
                d_positions[i].x += gpx * lk.scale_x;
                d_positions[i].y += gpy * lk.scale_y;
                d_positions[i].z += gpz * lk.scale_z;
            }
        }
    }
}

// Checkpoint: "OFP1", little-endian u32 header fields, f64 aabb, then the
// flat parameter vector as little-endian float32 in layout order.
void save_checkpoint(const FieldParams<float>& fp, const std::string& path);
FieldParams<float> load_checkpoint(const std::string& path);

} // namespace objnerf
