#pragma once

// Counter-based seeding: every random stream is derived from a tuple of
// integers (run seed, step, anchor, ...) so streams can be regenerated in any
// order. Variates are produced with explicit formulas rather than
// <random> distributions, whose output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace mpslam {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6A09E667F3BCC908ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Knuth's multiplication method; adequate for the small means used here.
    int poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Lightweight counter-based stream (splitmix64 over key + counter), cheap
/// enough to create one per particle.
class CounterStream {
public:
    explicit CounterStream(std::uint64_t key) : key_(key) {}

    double uniform() { return static_cast<double>(splitmix64(key_ + counter_++) >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller, caching the second variate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mpslam
