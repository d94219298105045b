#pragma once

#include <cmath>
#include <vector>

#include "ssr/autodiff.hpp"
#include "ssr/rng.hpp"

namespace ssr::test {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Reference product by the textbook triple loop.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
            c.at(i, j) = s;
        }
    return c;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Straightforward per-row simulation of the competitive dynamics; returns x^(T)
// and every intermediate state.
inline std::vector<std::vector<double>> simulate_ics(std::vector<double> z, const std::vector<double>& alphas) {
    std::vector<std::vector<double>> states;
    for (double& v : z) v = v > 0.0 ? v : 0.0;
    states.push_back(z);
    for (double a : alphas) {
        double mu = 0.0;
        for (double v : z) mu += v;
        mu /= static_cast<double>(z.size());
        for (double& v : z) {
            const double u = v - a * mu;
            v = u > 0.0 ? u : 0.0;
        }
        states.push_back(z);
    }
    return states;
}

}  // namespace ssr::test

#include "ssr/experiments.hpp"

namespace ssr::test {

inline SyntheticSpec small_spec(std::size_t n = 4000, std::uint64_t seed = 3) {
    SyntheticSpec s;
    s.n_samples = n;
    s.vocab_sizes = {20, 20, 20, 20};
    s.n_numeric = 1;
    s.relevant = 6;
    s.pairwise_terms = 4;
    s.n_users = 50;
    s.positive_rate = 0.3;
    s.seed = seed;
    return s;
}

inline PreparedData small_data(std::size_t n = 4000, std::uint64_t seed = 3) {
    Dataset d = generate(small_spec(n, seed)).data;
    split(d, {0.8, 0.1, 0.1}, seed);
    return prepare(d);
}

inline ModelConfig small_model(Backbone b = Backbone::SsrDynamic) {
    ModelConfig m;
    m.backbone = b;
    m.depth = 2;
    m.views = 2;
    m.view_dim = 4;
    m.embedding_dim = 4;
    return m;
}

}  // namespace ssr::test
