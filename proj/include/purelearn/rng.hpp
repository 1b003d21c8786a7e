#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace pl {

// Deterministic random stream. Every consumer takes an explicit Rng so runs
// are reproducible bit-for-bit; derive() forks an independent stream per
// purpose (data generation, init, batch sampling, ...) so adding one consumer
// never perturbs another's draws.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

    // Independent stream keyed by (seed, tag). FNV-1a over the tag keeps the
    // mapping stable across platforms.
    Rng derive(const std::string& tag) const {
        uint64_t h = 14695981039346656037ull;
        for (unsigned char c : tag) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return Rng(seed_ ^ h);
    }

    uint64_t bits() { return engine_(); }

    // Uniform in [0, 1): 53-bit mantissa construction.
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is < 2^-50 for the n used here.
    uint64_t next_u64(uint64_t n) { return bits() % n; }

    // Standard normal via Box-Muller; second value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    uint64_t seed() const { return seed_; }

private:
    std::mt19937_64 engine_;
    uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pl
