#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssr/autodiff.hpp"
#include "ssr/config.hpp"
#include "ssr/ics.hpp"
#include "ssr/rng.hpp"
#include "ssr/static_filter.hpp"

namespace ssr {

/// Parameters owned by one view. Pointers refer into the model's ParameterStore.
struct ViewParams {
    Parameter* projection = nullptr;  // d_in x d_v* (or d_in x d_v); null for gather/dropout filters
    IcsParams ics;                    // dynamic filter only
    Parameter* fusion = nullptr;      // V_i: filtered_width x d_v
    Parameter* bias = nullptr;        // d_v
    Parameter* ln_scale = nullptr;    // d_v; null without affine layer norm
    Parameter* ln_shift = nullptr;
};

/// Optional per-view intermediates recorded during a forward pass.
struct LayerCapture {
    std::vector<Var> filtered;   // h_i
    std::vector<Var> fused;      // h_i V_i + bias_i
    std::vector<Var> activated;  // z_i
    std::vector<IcsTrace> traces;
    bool want_traces = false;
};

struct LayerForwardContext {
    bool training = false;
    Rng* rng = nullptr;  // dropout masks; required when training a dropout filter
    LayerCapture* capture = nullptr;
};

/// One filter-then-fuse layer: b self-contained views, each filtering the
/// input, applying its own dense fusion, activation and layer norm; the views
/// are concatenated (intermediate layer) or averaged (final layer).
class SSRLayer {
public:
    /// Registers the layer's parameters under `prefix` and initialises them
    /// from `seed`. A static layer samples its selection from the same seed
    /// unless `selection` is given (checkpoint restore).
    SSRLayer(const SSRLayerConfig& config, std::size_t d_in, ParameterStore& store, const std::string& prefix,
             std::uint64_t seed, std::optional<ViewSelection> selection = std::nullopt);

    Var forward(Var x, const LayerForwardContext& ctx = {}) const;

    const SSRLayerConfig& config() const { return config_; }
    std::size_t input_width() const { return d_in_; }
    std::size_t output_width() const { return config_.output_width(); }
    const std::optional<ViewSelection>& selection() const { return selection_; }
    const std::vector<ViewParams>& views() const { return views_; }

private:
    Var filter(Var x, std::size_t view, const LayerForwardContext& ctx, IcsTrace* trace) const;

    SSRLayerConfig config_;
    std::size_t d_in_;
    std::optional<ViewSelection> selection_;
    std::vector<ViewParams> views_;
};

/// Glorot-style symmetric uniform initialisation of a fan_in x fan_out matrix.
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

Var activate(Var x, Activation a);

/// Task head: sigmoid(zbar W + b) with W of shape d_v x 1.
struct PredictionHead {
    std::string task;
    Parameter* weight = nullptr;
    Parameter* bias = nullptr;

    static PredictionHead create(ParameterStore& store, const std::string& task, std::size_t d_v, Rng& rng);
    /// Logits of shape [n].
    Var logits(Var zbar) const;
    /// Probabilities of shape [n].
    Var predict(Var zbar) const;
};

}  // namespace ssr
