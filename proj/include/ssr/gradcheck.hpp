#pragma once

#include <functional>
#include <string>

#include "ssr/autodiff.hpp"

namespace ssr {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::string worst_name;      // parameter name for store-based checks
    std::size_t checked = 0;
    std::size_t excluded = 0;    // coordinates whose +-step crosses a kink
};

/// Relative error with an absolute floor, so vanishing gradients do not
/// turn finite-difference round-off into huge ratios.
double relative_error(double analytic, double numeric, double floor = 1e-4);

/// Compares the tape gradient of scalar f at `point` with central differences.
/// Coordinates whose perturbation changes the kink signature are skipped.
GradCheckResult finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point,
                                  double step = 1e-5);

/// Same check over every coordinate of every parameter in `store`
/// (parameters are perturbed in place and restored).
GradCheckResult finite_diff_check(const std::function<Var(Tape&)>& loss, ParameterStore& store,
                                  double step = 1e-5);

}  // namespace ssr
