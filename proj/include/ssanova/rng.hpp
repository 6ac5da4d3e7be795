#pragma once

#include <cstdint>
#include <random>

#include "ssanova/normal.hpp"

namespace ssanova {

/// SplitMix64 output function; used to whiten stream keys.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Splitting rule for replicate streams: the stream for (root, a, b) is
/// independent of the order replicates run in. `a` is typically the scenario
/// key (e.g. sample size), `b` the replicate index.
inline std::uint64_t derive_stream(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(root ^ (a * 0xD1342543DE82EF95ULL)) ^
                      (b * 0x9E3779B97F4A7C15ULL));
}

/// Deterministic draws on top of mt19937_64. The real-valued transforms are
/// written out explicitly (not std::*_distribution) so streams are
/// reproducible bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on (0, 1), 53-bit resolution, endpoints excluded.
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by inverse-CDF transform.
    double normal() { return normal_quantile(uniform01()); }

private:
    std::mt19937_64 gen_;
};

} // namespace ssanova
