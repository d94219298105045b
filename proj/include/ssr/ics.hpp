#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ssr/autodiff.hpp"
#include "ssr/kernels.hpp"

namespace ssr {

/// Per-step statistics of the competitive dynamics, one entry per state
/// x^(0) .. x^(T) (so T+1 entries), aggregated over the batch.
struct IcsTrace {
    std::vector<double> sparsity;  // fraction of exact zeros
    std::vector<double> mean_abs;  // mean |x|
    std::vector<double> mu;        // batch mean of the per-row mean field

    std::size_t size() const { return sparsity.size(); }
    /// CSV with header `step,sparsity,mean_abs,mu`.
    void write_csv(std::ostream& os) const;
};

/// Learnable state of one sparsifier: T unconstrained rates mapped through
/// softplus to strictly positive extinction rates, and an optional
/// per-dimension recovery scale.
struct IcsParams {
    Parameter* alpha_raw = nullptr;  // shape [T]
    Parameter* gamma = nullptr;      // shape [d]; null when recovery is disabled
    std::size_t iterations = 0;
    std::size_t width = 0;
};

/// Inverse softplus: the raw value whose softplus equals `alpha` (> 0).
double alpha_to_raw(double alpha);
double raw_to_alpha(double raw);

/// Registers `<prefix>.ics_alpha_raw` and `<prefix>.ics_gamma` in `store`.
IcsParams make_ics_params(ParameterStore& store, const std::string& prefix, std::size_t iterations,
                          std::size_t width, double alpha_init = 0.1, bool use_gamma = true);

/// Core differentiable op. z is [n x d], alphas is [T] (already positive),
/// gamma is [d] or null. Differentiates the full dynamics, including the
/// dependence of every mean field on every coordinate.
Var ics(Var z, Var alphas, const Var* gamma, IcsTrace* trace = nullptr);

/// Convenience wrapper binding `params` onto z's tape.
Var ics_forward(Var z, const IcsParams& params, IcsTrace* trace = nullptr);

/// Fraction of entries exactly equal to zero.
double ics_sparsity(const Tensor& y);

/// Hard top-k by magnitude per row (ties keep the lower index); the backward
/// pass is the identity.
Var ste_topk(Var z, std::size_t k);

/// Runs the instrumented reference dynamics on `trials` random rows of width d.
kernels::IcsOpCounter ics_complexity_probe(std::size_t d, std::size_t iterations, std::size_t trials,
                                           std::uint64_t seed = 1);

}  // namespace ssr
