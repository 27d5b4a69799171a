#pragma once

#include <cmath>
#include <cstdint>

namespace lendopt::rng {

// Stateless counter-based random streams.  Every uniform is a pure function of
// (seed, path, step, trial, tag), so simulation results do not depend on the
// order paths are scheduled across threads.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

/// Derive a child seed; used for per-iteration and per-purpose streams.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return mix(seed + kGolden * (tag + 1));
}

/// Key identifying the (path, step, sign) slot of a simulation.
inline std::uint64_t path_key(std::uint64_t seed, std::uint64_t path) {
    return mix(seed ^ (path * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

inline std::uint64_t step_key(std::uint64_t pkey, std::uint64_t step, std::uint64_t sign) {
    return mix(pkey ^ ((2 * step + sign + 1) * 0xACBD2BFE89F0C1A7ULL));
}

/// Uniform in the open interval (0, 1): 53-bit mantissa, offset by half an ulp.
inline double to_unit(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(std::uint64_t skey, std::uint64_t trial) {
    return to_unit(mix(skey ^ (trial * 0x9FB21C651E98DF25ULL + 0xEB44ACCAB455D165ULL)));
}

// Reserved step tags for draws that are not jump trials.
inline constexpr std::uint64_t kTagInitialUtil = 0xFFFFFFFF0001ULL;
inline constexpr std::uint64_t kTagSampler = 0xFFFFFFFF0002ULL;

/// Counting Poisson sampler (inversion by sequential search); fine for small rates.
inline int poisson_sample(double lambda, std::uint64_t skey, std::uint64_t& trial_counter) {
    if (lambda <= 0.0) return 0;
    const double u = uniform(skey, trial_counter++);
    double p = std::exp(-lambda);
    double cdf = p;
    int k = 0;
    while (u > cdf && k < 10000) {
        ++k;
        p *= lambda / k;
        cdf += p;
    }
    return k;
}

/// Skellam draw as the difference of two independent Poisson counts.
inline int skellam_sample(double lambda_plus, double lambda_minus, std::uint64_t skey,
                          std::uint64_t& trial_counter) {
    return poisson_sample(lambda_plus, skey, trial_counter) -
           poisson_sample(lambda_minus, skey, trial_counter);
}

}  // namespace lendopt::rng
