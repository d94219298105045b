#include "ssr/optim.hpp"

#include <cmath>

#include "ssr/error.hpp"

namespace ssr {

void adam_step(ParameterStore& params, AdamState& state, const TrainConfig& config) {
    if (state.m.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m.emplace_back(params[i].value.shape());
            state.v.emplace_back(params[i].value.shape());
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("optimizer state does not match the parameter set");
    ++state.step;
    const double b1 = config.beta1, b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        if (p.grad.numel() != p.value.numel() || state.m[i].numel() != p.value.numel())
            throw DimensionError("gradient shape mismatch for parameter " + p.name);
        auto w = p.value.values();
        auto g = p.grad.values();
        auto m = state.m[i].values();
        auto v = state.v[i].values();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            w[k] -= config.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.epsilon);
        }
    }
}

}  // namespace ssr
