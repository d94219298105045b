#pragma once

#include <cstdint>
#include <vector>

#include "ssr/autodiff.hpp"
#include "ssr/config.hpp"

namespace ssr {

/// First and second moments per parameter, in ParameterStore order.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update of every parameter from its `grad`.
void adam_step(ParameterStore& params, AdamState& state, const TrainConfig& config);

}  // namespace ssr
