#include <doctest.h>

#include <objnerf/hashfield.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

using namespace objnerf;
namespace fs = std::filesystem;

namespace {

// small configuration keeping finite-difference probes fast
HashGridConfig tiny_config() {
    HashGridConfig cfg;
    cfg.n_levels = 2;
    cfg.table_size = 1u << 10;
    cfg.features_per_entry = 2;
    cfg.base_resolution = 4;
    cfg.finest_resolution = 16;
    cfg.hidden_width = 8;
    cfg.latent_dim = 4;
    cfg.sh_degree = 2;
    return cfg;
}

// independent reimplementation of the XOR-prime corner hash (64-bit math,
// masked at the end; only the low bits can matter)
uint32_t ref_hash(uint64_t x, uint64_t y, uint64_t z, uint32_t mask) {
    return uint32_t((x ^ (y * 2654435761ull) ^ (z * 805459861ull)) & mask);
}

template <typename S>
double forward_objective(const FieldParams<S>& fp, const Vec3<S>& pos, const Vec3<S>& dir,
                         const std::vector<double>& a, const std::vector<double>& b) {
    FieldCache<S> cache;
    std::vector<Vec3<S>> ps{pos}, ds{dir};
    field_forward<S>(fp, ps, ds, cache);
    double L = a[0] * double(cache.sigma[0]);
    for (int j = 0; j < 3; ++j) L += b[j] * double(cache.color[j]);
    return L;
}

} // namespace

TEST_SUITE("hashfield") {

TEST_CASE("config defaults match the published table and level layout") {
    HashGridConfig cfg;
    CHECK(cfg.n_levels == 16);
    CHECK(cfg.table_size == (1u << 19));
    CHECK(cfg.features_per_entry == 2);
    CHECK(cfg.base_resolution == 16);
    CHECK(cfg.finest_resolution == 2048);
    CHECK(cfg.hidden_width == 64);
    CHECK(cfg.latent_dim == 15);
    CHECK(cfg.sh_degree == 4);

    CHECK(cfg.growth() == doctest::Approx(std::exp(std::log(2048.0 / 16.0) / 15)).epsilon(1e-15));

    // frozen N_l = floor(16 * b^l) ladder and the dense/hashed split
    const int expect[16] = {16,  22,  30,  42,  58,  80,   111,  153,
                            212, 294, 406, 561, 776, 1072, 1482, 2048};
    for (int l = 0; l < 16; ++l) {
        CHECK(cfg.level_resolution(l) == expect[l]);
        uint64_t n = uint64_t(expect[l]) + 1;
        CHECK(cfg.level_dense(l) == (n * n * n <= cfg.table_size));
    }
    CHECK(cfg.level_dense(4));   // 59^3 fits in 2^19
    CHECK(!cfg.level_dense(5));  // 81^3 does not

    HashGridConfig forced = cfg;
    forced.force_hash = true;
    for (int l = 0; l < 16; ++l) CHECK(!forced.level_dense(l));

    HashGridConfig bad = tiny_config();
    bad.table_size = 1000; // not a power of two
    CHECK_THROWS_WITH(bad.validate(), doctest::Contains("power of two"));
    bad = tiny_config();
    bad.finest_resolution = 2;
    CHECK_THROWS(bad.validate());
    bad = tiny_config();
    bad.sh_degree = 5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("corner hash matches the XOR-prime reference") {
    uint32_t mask19 = (1u << 19) - 1;
    CHECK(hash_corner(1, 2, 3, mask19) == 128476);
    CHECK(hash_corner(100, 200, 300, mask19) == 110768);

    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        uint32_t x = uint32_t(rng.uniform_int(4096)), y = uint32_t(rng.uniform_int(4096)),
                 z = uint32_t(rng.uniform_int(4096));
        uint32_t mask = (1u << (4 + rng.uniform_int(16))) - 1;
        CHECK(hash_corner(x, y, z, mask) == ref_hash(x, y, z, mask));
    }
}

TEST_CASE("encode: zero grid, corner degeneracy, partition of unity") {
    Box3d box{{0, 0, 0}, {1, 1, 1}};

    SUBCASE("zero grid gives zero features everywhere") {
        auto fp = FieldParams<double>::make(tiny_config(), box);
        std::vector<double> feats(fp.cfg.feature_dim());
        Rng rng(3);
        for (int i = 0; i < 20; ++i) {
            Vec3d p{rng.uniform(), rng.uniform(), rng.uniform()};
            encode(fp, p, feats.data());
            for (double v : feats) CHECK(v == 0.0);
        }
    }

    SUBCASE("position on a grid corner returns that corner's raw feature") {
        HashGridConfig cfg = tiny_config();
        cfg.n_levels = 1;
        cfg.base_resolution = cfg.finest_resolution = 16;
        cfg.table_size = 1u << 15; // 17^3 fits: dense indexing
        auto fp = FieldParams<double>::make(cfg, box);
        REQUIRE(fp.levels[0].dense);

        uint32_t stride = 17;
        uint32_t idx = 3 + stride * (5 + stride * 7);
        fp.params[size_t(idx) * 2 + 0] = 1.25;
        fp.params[size_t(idx) * 2 + 1] = -2.5;
        std::vector<double> feats(cfg.feature_dim());
        encode(fp, Vec3d{3 / 16.0, 5 / 16.0, 7 / 16.0}, feats.data());
        CHECK(feats[0] == 1.25);
        CHECK(feats[1] == -2.5);

        // the far box corner lands on the last lattice corner
        uint32_t last = 16 + stride * (16 + stride * 16);
        fp.params[size_t(last) * 2 + 0] = 9.0;
        encode(fp, Vec3d{1, 1, 1}, feats.data());
        CHECK(feats[0] == 9.0);
    }

    SUBCASE("constant table encodes to the constant: weights sum to 1") {
        for (bool forced : {false, true}) {
            HashGridConfig cfg = tiny_config();
            cfg.force_hash = forced;
            auto fp = FieldParams<double>::make(cfg, Box3d{{-0.3, -0.3, -0.3}, {0.7, 0.9, 0.7}});
            for (size_t i = 0; i < fp.grid_size; ++i) fp.params[i] = 3.75;
            std::vector<double> feats(cfg.feature_dim());
            Rng rng(11);
            for (int i = 0; i < 50; ++i) {
                Vec3d p{rng.uniform(-0.3, 0.7), rng.uniform(-0.3, 0.9), rng.uniform(-0.3, 0.7)};
                encode(fp, p, feats.data());
                for (double v : feats) CHECK(v == doctest::Approx(3.75).epsilon(1e-12));
            }
        }
    }

    SUBCASE("matches a manual 8-term trilinear computation") {
        Box3d nb{{-0.3, -0.1, 0.2}, {0.7, 0.9, 1.0}};
        auto fp = FieldParams<double>::make(tiny_config(), nb);
        Rng rng(17);
        for (size_t i = 0; i < fp.grid_size; ++i) fp.params[i] = rng.uniform(-1, 1);

        for (int rep = 0; rep < 25; ++rep) {
            Vec3d p{rng.uniform(-0.3, 0.7), rng.uniform(-0.1, 0.9), rng.uniform(0.2, 1.0)};
            std::vector<double> feats(fp.cfg.feature_dim());
            encode(fp, p, feats.data());

            for (int l = 0; l < fp.cfg.n_levels; ++l) {
                int res = fp.cfg.level_resolution(l);
                double x[3], frac[3];
                uint32_t c0[3];
                for (int a = 0; a < 3; ++a) {
                    double lo = (&nb.min.x)[a], hi = (&nb.max.x)[a];
                    double p01 = std::clamp(((&p.x)[a] - lo) / (hi - lo), 0.0, 1.0);
                    x[a] = p01 * res;
                    double cell = std::min(std::floor(x[a]), double(res - 1));
                    c0[a] = uint32_t(cell);
                    frac[a] = x[a] - cell;
                }
                double want[2] = {0, 0};
                for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            uint32_t cx = c0[0] + dx, cy = c0[1] + dy, cz = c0[2] + dz;
                            uint32_t idx;
                            if (fp.cfg.level_dense(l)) {
                                uint32_t s = uint32_t(res) + 1;
                                idx = cx + s * (cy + s * cz);
                            } else {
                                idx = ref_hash(cx, cy, cz, fp.cfg.table_size - 1);
                            }
                            double w = (dx ? frac[0] : 1 - frac[0]) * (dy ? frac[1] : 1 - frac[1]) *
                                       (dz ? frac[2] : 1 - frac[2]);
                            const double* entry = fp.grid_level(l) + size_t(idx) * 2;
                            want[0] += w * entry[0];
                            want[1] += w * entry[1];
                        }
                CHECK(feats[l * 2 + 0] == doctest::Approx(want[0]).epsilon(1e-12));
                CHECK(feats[l * 2 + 1] == doctest::Approx(want[1]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("hash collisions alias feature storage") {
    HashGridConfig cfg = tiny_config();
    cfg.n_levels = 1;
    cfg.base_resolution = cfg.finest_resolution = 4;
    cfg.table_size = 8;
    cfg.features_per_entry = 1;
    cfg.force_hash = true;
    Box3d box{{0, 0, 0}, {1, 1, 1}};
    auto fp = FieldParams<float>::make(cfg, box);
    Rng rng(5);
    fp.init_params(rng);

    // collect the table slots each position touches; 8 slots vs 8 corners
    // per position guarantees overlap for these two cells
    auto slots = [&](const Vec3f& p) {
        LevelLookup<float> lk;
        level_lookup(cfg, box, 0, p, lk);
        return std::set<uint32_t>(lk.corner_index, lk.corner_index + 8);
    };
    Vec3f p1{0.1f, 0.2f, 0.3f}, p2{0.8f, 0.7f, 0.6f};
    std::set<uint32_t> s1 = slots(p1), s2 = slots(p2);
    uint32_t shared = UINT32_MAX;
    for (uint32_t s : s1)
        if (s2.count(s)) shared = s;
    REQUIRE(shared != UINT32_MAX);

    auto sigma_at = [&](const Vec3f& p) {
        FieldCache<float> cache;
        std::vector<Vec3f> ps{p}, ds{{0, 0, 1}};
        field_forward<float>(fp, ps, ds, cache);
        return cache.sigma[0];
    };
    float a1 = sigma_at(p1), a2 = sigma_at(p2);
    fp.params[shared] += 0.5f; // one entry feeds both lookups
    CHECK(sigma_at(p1) != a1);
    CHECK(sigma_at(p2) != a2);
}

TEST_CASE("field_forward: activation identities and output ranges") {
    Box3d box{{0, 0, 0}, {1, 1, 1}};

    SUBCASE("all-zero parameters give sigma = 1 and mid-gray color") {
        auto fp = FieldParams<float>::make(tiny_config(), box);
        FieldCache<float> cache;
        std::vector<Vec3f> ps{{0.3f, 0.4f, 0.5f}}, ds{{0, 0, 1}};
        field_forward<float>(fp, ps, ds, cache);
        CHECK(cache.sigma[0] == 1.0f);
        CHECK(cache.color[0] == 0.5f);
        CHECK(cache.color[1] == 0.5f);
        CHECK(cache.color[2] == 0.5f);
    }

    SUBCASE("sigma nonnegative, color in [0,1] under random parameters") {
        auto fp = FieldParams<float>::make(tiny_config(), box);
        Rng rng(23);
        for (size_t i = 0; i < fp.params.size(); ++i) fp.params[i] = float(rng.uniform(-2, 2));
        FieldCache<float> cache;
        for (int rep = 0; rep < 100; ++rep) {
            Vec3d d = normalized(Vec3d{rng.normal(), rng.normal(), rng.normal()});
            std::vector<Vec3f> ps{{float(rng.uniform()), float(rng.uniform()),
                                   float(rng.uniform())}},
                ds{d.cast<float>()};
            field_forward<float>(fp, ps, ds, cache);
            CHECK(cache.sigma[0] >= 0.0f);
            for (int j = 0; j < 3; ++j) {
                CHECK(cache.color[j] >= 0.0f);
                CHECK(cache.color[j] <= 1.0f);
            }
        }
        // the raw-density clamp caps sigma even for absurd parameters
        for (size_t i = 0; i < fp.params.size(); ++i) fp.params[i] = 50.0f;
        std::vector<Vec3f> ps{{0.5f, 0.5f, 0.5f}}, ds{{0, 0, 1}};
        field_forward<float>(fp, ps, ds, cache);
        CHECK(cache.sigma[0] == doctest::Approx(std::exp(12.0)).epsilon(1e-6));
    }

    SUBCASE("non-finite parameters are reported") {
        auto fp = FieldParams<float>::make(tiny_config(), box);
        Rng rng(2);
        fp.init_params(rng);
        fp.params[fp.db2] = std::numeric_limits<float>::quiet_NaN(); // raw density bias
        FieldCache<float> cache;
        std::vector<Vec3f> ps{{0.5f, 0.5f, 0.5f}}, ds{{0, 0, 1}};
        CHECK_THROWS_WITH(field_forward<float>(fp, ps, ds, cache),
                          doctest::Contains("diverged parameters"));
        CHECK(!fp.all_finite());
    }

    SUBCASE("degenerate box is rejected") {
        CHECK_THROWS_WITH((void)FieldParams<float>::make(tiny_config(), Box3d{{0, 0, 0}, {0, 1, 1}}),
                          doctest::Contains("degenerate"));
    }
}

TEST_CASE("parameter layout arithmetic") {
    HashGridConfig cfg = tiny_config();
    cfg.n_levels = 2;
    cfg.table_size = 16;
    auto fp = FieldParams<float>::make(cfg, Box3d{{0, 0, 0}, {1, 1, 1}});
    // grid 2*16*2, density 8x4+8 + 5x8+5, color 8x8+8 + 8x8+8 + 3x8+3
    CHECK(fp.grid_size == 64);
    CHECK(fp.mlp_offset() == 64);
    CHECK(fp.mlp_count() == 256);
    CHECK(fp.param_count() == 320);
    CHECK(fp.grid_level(1) - fp.grid_level(0) == 32);
}

TEST_CASE("spherical harmonics: constant band and per-band addition theorem") {
    double y00 = 1.0 / (2.0 * std::sqrt(M_PI));
    double out[16];
    sh_basis(1, Vec3d{0, 0, 1}, out);
    CHECK(out[0] == doctest::Approx(y00).epsilon(1e-15));

    // sum_m Y_lm(d)^2 = (2l+1)/(4 pi) for every band at any direction
    Rng rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        Vec3d d = normalized(Vec3d{rng.normal(), rng.normal(), rng.normal()});
        sh_basis(4, d, out);
        for (int l = 0; l < 4; ++l) {
            double s = 0;
            for (int m = 0; m < 2 * l + 1; ++m) s += out[l * l + m] * out[l * l + m];
            CHECK(s == doctest::Approx((2 * l + 1) / (4.0 * M_PI)).epsilon(1e-10));
        }
    }
}

TEST_CASE("field_backward: zero upstream gives zero gradients") {
    Box3d box{{0, 0, 0}, {1, 1, 1}};
    auto fp = FieldParams<double>::make(tiny_config(), box);
    Rng rng(41);
    fp.init_params(rng);
    FieldCache<double> cache;
    std::vector<Vec3d> ps{{0.3, 0.6, 0.2}}, ds{{0, 0, 1}};
    field_forward<double>(fp, ps, ds, cache);

    std::vector<double> d_sigma{0.0}, d_color(3, 0.0);
    std::vector<double> gg(fp.grid_size, 0.0), gm(fp.mlp_count(), 0.0);
    std::vector<Vec3d> d_pos(1, Vec3d{0, 0, 0}), d_dir(1, Vec3d{0, 0, 0});
    field_backward<double>(fp, ps, ds, cache, d_sigma, d_color,
                           [&](uint32_t i, double v) { gg[i] += v; }, gm, d_pos, d_dir);
    for (double v : gg) CHECK(v == 0.0);
    for (double v : gm) CHECK(v == 0.0);
    CHECK(norm(d_pos[0]) == 0.0);
    CHECK(norm(d_dir[0]) == 0.0);
}

TEST_CASE("field_backward: gradients match central finite differences") {
    Box3d box{{-0.2, 0.0, -0.5}, {0.8, 1.0, 0.5}};
    auto fp = FieldParams<double>::make(tiny_config(), box);
    Rng rng(43);
    fp.init_params(rng);
    // boost the grid away from its tiny init so grid partials are observable
    for (size_t i = 0; i < fp.grid_size; ++i) fp.params[i] = rng.uniform(-0.5, 0.5);

    std::vector<double> a{0.7}, b{0.4, -0.9, 0.6};

    auto probe = [&](Rng& r) {
        // a sample point away from every level's cell faces
        Vec3d pos, dir;
        for (;;) {
            Vec3d p01{r.uniform(), r.uniform(), r.uniform()};
            bool ok = true;
            for (int l = 0; l < fp.cfg.n_levels && ok; ++l) {
                int res = fp.cfg.level_resolution(l);
                for (int ax = 0; ax < 3; ++ax) {
                    double f = p01[ax] * res - std::floor(p01[ax] * res);
                    if (f < 0.05 || f > 0.95) ok = false;
                }
            }
            if (!ok) continue;
            pos = box.min + Vec3d{p01.x * (box.max.x - box.min.x), p01.y * (box.max.y - box.min.y),
                                  p01.z * (box.max.z - box.min.z)};
            break;
        }
        dir = normalized(Vec3d{r.normal(), r.normal(), r.normal()});
        return std::pair{pos, dir};
    };

    auto analytic = [&](const Vec3d& pos, const Vec3d& dir, std::vector<double>& gg,
                        std::vector<double>& gm, Vec3d& gp, Vec3d& gd) {
        FieldCache<double> cache;
        std::vector<Vec3d> ps{pos}, ds{dir};
        field_forward<double>(fp, ps, ds, cache);
        gg.assign(fp.grid_size, 0.0);
        gm.assign(fp.mlp_count(), 0.0);
        std::vector<Vec3d> d_pos(1, Vec3d{0, 0, 0}), d_dir(1, Vec3d{0, 0, 0});
        std::vector<double> d_sigma{a[0]}, d_color = b;
        field_backward<double>(fp, ps, ds, cache, d_sigma, d_color,
                               [&](uint32_t i, double v) { gg[i] += v; }, gm, d_pos, d_dir);
        gp = d_pos[0];
        gd = d_dir[0];
    };

    SUBCASE("parameter gradients, 100 probes, relative error < 1e-3") {
        for (int rep = 0; rep < 100; ++rep) {
            auto [pos, dir] = probe(rng);
            std::vector<double> gg, gm;
            Vec3d gp, gd;
            analytic(pos, dir, gg, gm, gp, gd);

            size_t idx;
            double expect;
            if (rep % 2 == 0) {
                // a grid entry the lookup actually touched
                LevelLookup<double> lk;
                int l = int(rng.uniform_int(fp.cfg.n_levels));
                level_lookup(fp.cfg, box, l, pos, lk);
                int k = int(rng.uniform_int(8));
                int j = int(rng.uniform_int(fp.cfg.features_per_entry));
                idx = size_t(l) * fp.cfg.table_size * fp.cfg.features_per_entry +
                      size_t(lk.corner_index[k]) * fp.cfg.features_per_entry + size_t(j);
                expect = gg[idx];
            } else {
                idx = fp.mlp_offset() + rng.uniform_int(fp.mlp_count());
                expect = gm[idx - fp.mlp_offset()];
            }

            double h = 1e-3, saved = fp.params[idx];
            fp.params[idx] = saved + h;
            double up = forward_objective(fp, pos, dir, a, b);
            fp.params[idx] = saved - h;
            double dn = forward_objective(fp, pos, dir, a, b);
            fp.params[idx] = saved;
            double fd = (up - dn) / (2 * h);
            if (std::abs(fd) < 1e-9 && std::abs(expect) < 1e-9) continue;
            CHECK(expect == doctest::Approx(fd).epsilon(1e-3));
        }
    }

    SUBCASE("position and direction gradients, relative error < 1e-2") {
        for (int rep = 0; rep < 100; ++rep) {
            auto [pos, dir] = probe(rng);
            std::vector<double> gg, gm;
            Vec3d gp, gd;
            analytic(pos, dir, gg, gm, gp, gd);

            double h = 1e-6;
            int ax = int(rng.uniform_int(3));
            Vec3d pu = pos, pd = pos;
            (&pu.x)[ax] += h;
            (&pd.x)[ax] -= h;
            double fd = (forward_objective(fp, pu, dir, a, b) -
                         forward_objective(fp, pd, dir, a, b)) /
                        (2 * h);
            CHECK((&gp.x)[ax] == doctest::Approx(fd).epsilon(1e-2));

            // direction enters only through the polynomial SH basis
            Vec3d du = dir, dd = dir;
            (&du.x)[ax] += h;
            (&dd.x)[ax] -= h;
            double fdd = (forward_objective(fp, pos, du, a, b) -
                          forward_objective(fp, pos, dd, a, b)) /
                         (2 * h);
            if (std::abs(fdd) < 1e-9 && std::abs((&gd.x)[ax]) < 1e-9) continue;
            CHECK((&gd.x)[ax] == doctest::Approx(fdd).epsilon(1e-3));
        }
    }
}

TEST_CASE("dense and hashed indexing agree when populated consistently") {
    HashGridConfig cfg = tiny_config();
    cfg.n_levels = 1;
    cfg.base_resolution = cfg.finest_resolution = 4;
    cfg.table_size = 1u << 15;
    Box3d box{{0, 0, 0}, {1, 1, 1}};
    auto dense = FieldParams<double>::make(cfg, box);
    REQUIRE(dense.levels[0].dense);

    Rng rng(53);
    for (size_t i = 0; i < dense.grid_size; ++i) dense.params[i] = rng.uniform(-1, 1);

    HashGridConfig hcfg = cfg;
    hcfg.force_hash = true;
    auto hashed = FieldParams<double>::make(hcfg, box);
    REQUIRE(!hashed.levels[0].dense);

    // copy each lattice corner's features to its hash slot; this particular
    // resolution/table pairing is collision-free, checked below
    std::set<uint32_t> used;
    for (uint32_t z = 0; z <= 4; ++z)
        for (uint32_t y = 0; y <= 4; ++y)
            for (uint32_t x = 0; x <= 4; ++x) {
                uint32_t di = x + 5 * (y + 5 * z);
                uint32_t hi = hash_corner(x, y, z, cfg.table_size - 1);
                REQUIRE(used.insert(hi).second);
                for (int j = 0; j < cfg.features_per_entry; ++j)
                    hashed.params[size_t(hi) * 2 + j] = dense.params[size_t(di) * 2 + j];
            }

    std::vector<double> fa(cfg.feature_dim()), fb(cfg.feature_dim());
    for (int rep = 0; rep < 200; ++rep) {
        Vec3d p{rng.uniform(), rng.uniform(), rng.uniform()};
        encode(dense, p, fa.data());
        encode(hashed, p, fb.data());
        for (int j = 0; j < cfg.feature_dim(); ++j) CHECK(fa[j] == doctest::Approx(fb[j]).epsilon(1e-14));
    }
}

TEST_CASE("checkpoint round trip preserves everything; malformed files are rejected") {
    fs::path dir = fs::temp_directory_path() / "objnerf_test_ckpt";
    fs::create_directories(dir);
    std::string path = (dir / "field.ofp").string();

    HashGridConfig cfg = tiny_config();
    auto fp = FieldParams<float>::make(cfg, Box3d{{-0.4, 0.1, 0.0}, {0.6, 1.1, 0.9}});
    Rng rng(61);
    fp.init_params(rng);
    save_checkpoint(fp, path);

    FieldParams<float> back = load_checkpoint(path);
    CHECK(back.cfg == cfg);
    CHECK(back.aabb.min.x == fp.aabb.min.x);
    CHECK(back.aabb.max.z == fp.aabb.max.z);
    REQUIRE(back.params.size() == fp.params.size());
    for (size_t i = 0; i < fp.params.size(); ++i) REQUIRE(back.params[i] == fp.params[i]);
    CHECK(back.levels.size() == fp.levels.size());

    CHECK_THROWS(load_checkpoint((dir / "missing.ofp").string()));

    // corrupt the magic
    {
        FILE* f = fopen(path.c_str(), "r+b");
        REQUIRE(f);
        fputc('X', f);
        fclose(f);
    }
    CHECK_THROWS_WITH(load_checkpoint(path), doctest::Contains("magic"));

    // truncated payload
    save_checkpoint(fp, path);
    fs::resize_file(path, fs::file_size(path) - 8);
    CHECK_THROWS_WITH(load_checkpoint(path), doctest::Contains("truncated"));

    fs::remove_all(dir);
}

TEST_CASE("precision cast round trip") {
    auto fp = FieldParams<float>::make(tiny_config(), Box3d{{0, 0, 0}, {1, 1, 1}});
    Rng rng(71);
    fp.init_params(rng);
    FieldParams<double> fd = fp.cast<double>();
    FieldParams<float> back = fd.cast<float>();
    REQUIRE(back.params.size() == fp.params.size());
    for (size_t i = 0; i < fp.params.size(); ++i) REQUIRE(back.params[i] == fp.params[i]);
    CHECK(fd.levels[1].res == fp.levels[1].res);
}

} // TEST_SUITE
