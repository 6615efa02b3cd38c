#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cthunet {

// Deterministic random source. The engine is std::mt19937_64 (bit-exact per
// the standard); the value transforms live here because the standard
// distributions are implementation-defined and would break reproducibility
// across stdlib versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    int below(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    bool coin() { return (next_u64() & 1u) != 0; }

    // Standard normal via Box-Muller; the paired value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates; std::shuffle is implementation-defined.
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent stream key, e.g. per sample or per epoch.
    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace cthunet
