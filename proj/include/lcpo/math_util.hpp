#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace lcpo {

// Probabilities and reliabilities are kept inside [kProbEps, 1 - kProbEps]
// so posteriors and log-likelihoods stay finite.
inline constexpr double kProbEps = 1e-6;

/// Numerically stable logistic function.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow for large |x|.
inline double softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

/// log(sigmoid(x)) = -softplus(-x).
inline double log_sigmoid(double x) {
    return -softplus(-x);
}

inline double clamp_prob(double p, double eps = kProbEps) {
    if (p < eps) return eps;
    if (p > 1.0 - eps) return 1.0 - eps;
    return p;
}

/// Posterior probability that a label is correct given the model's
/// preference probability p for the annotated orientation and the
/// annotator reliability eta. Inputs are assumed to lie in (0,1).
inline double posterior_weight(double p, double eta) {
    return p * eta / (p * eta + (1.0 - p) * (1.0 - eta));
}

/// Kahan compensated accumulator for long sums.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// SplitMix64: tiny counter-friendly PRNG. Used to derive independent
/// per-item streams from a single run seed, so generation order (or
/// parallelism) cannot change the output.
struct SplitMix64 {
    using result_type = std::uint64_t;
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<std::uint64_t>::max();
    }

    result_type operator()() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

/// Mixes a seed with a stream id into a well-separated substream seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 rng(seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL));
    return rng();
}

}  // namespace lcpo
