#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ssr {

/// Portable seeded generator. The bit stream comes from std::mt19937_64,
/// whose output sequence is fixed by the C++ standard; the conversions to
/// doubles, bounded integers and normals are implemented here (the standard
/// distributions are implementation-defined and would break reproducibility
/// across toolchains).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n) by rejection sampling (no modulo bias).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (the second variate is cached).
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

    /// Draw `k` distinct values from [0, n) with a partial Fisher-Yates shuffle.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finaliser; used to derive independent sub-seeds
/// (per layer, per epoch, ...) from one user seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ssr
