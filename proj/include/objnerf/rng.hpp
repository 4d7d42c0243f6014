#pragma once

#include <cmath>
#include <cstdint>

namespace objnerf {

// SplitMix64 finalizer; full-avalanche 64-bit mix.
constexpr uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based deterministic generator. Output depends only on (key, counter),
// both pure integer math, so sequences are identical on every platform.
// Independent streams come from fork(): consuming draws on one stream never
// shifts another.
class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(uint64_t seed) : key_(mix64(seed ^ 0x6f7261636c65ull)), counter_(0) {}

    uint64_t seed_key() const { return key_; }
    uint64_t counter() const { return counter_; }

    // Derived stream, decorrelated from this one; does not consume a draw.
    Rng fork(uint64_t tag) const {
        Rng r;
        r.key_ = mix64(key_ ^ mix64(tag + 0x517cc1b727220a95ull));
        r.counter_ = 0;
        return r;
    }
    Rng fork(uint64_t a, uint64_t b) const { return fork(a).fork(b); }

    uint64_t next_u64() { return mix64(key_ + mix64(counter_++ ^ key_)); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); n > 0.
    uint64_t uniform_int(uint64_t n) {
        return uint64_t((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; two draws per value.
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform direction on the unit sphere.
    void unit_vector(double& x, double& y, double& z) {
        double zz = uniform(-1.0, 1.0);
        double phi = uniform(0.0, 2.0 * 3.141592653589793238462643);
        double r = std::sqrt(std::max(0.0, 1.0 - zz * zz));
        x = r * std::cos(phi);
        y = r * std::sin(phi);
        z = zz;
    }

private:
    uint64_t key_;
    uint64_t counter_;
};

} // namespace objnerf
