#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ssr/autodiff.hpp"
#include "ssr/config.hpp"
#include "ssr/ssr_layer.hpp"

namespace ssr {

/// Embedding vocabulary of each input field.
struct FeatureSchema {
    std::vector<std::size_t> vocab_sizes;
    std::size_t n_fields() const { return vocab_sizes.size(); }
};

struct DenseLayer {
    Parameter* weight = nullptr;
    Parameter* bias = nullptr;
};

/// Embedding tables, backbone (stacked SSR layers or a dense MLP) and task
/// heads on one parameter registry.
class Model {
public:
    /// `selections`, when given, restores static layers' view indices (one
    /// entry per layer; nullopt for non-static layers).
    Model(const ModelConfig& config, const FeatureSchema& schema,
          const std::vector<std::optional<ViewSelection>>& selections = {});

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    /// Concatenated field embeddings, [n x (fields * embedding_dim)].
    Var embed(Tape& tape, std::span<const std::uint32_t> ids, std::size_t n) const;
    /// Final representation fed to the heads.
    Var backbone(Var x, const LayerForwardContext& ctx = {}, std::vector<LayerCapture>* captures = nullptr) const;
    /// Logits of every head, each of shape [n]. `ids` is row-major n x fields.
    std::vector<Var> forward(Tape& tape, std::span<const std::uint32_t> ids, std::size_t n,
                             const LayerForwardContext& ctx = {}, std::vector<LayerCapture>* captures = nullptr) const;

    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    const ModelConfig& config() const { return config_; }
    const FeatureSchema& schema() const { return schema_; }
    std::size_t input_width() const { return schema_.n_fields() * config_.embedding_dim; }
    const std::vector<SSRLayer>& layers() const { return layers_; }
    const std::vector<DenseLayer>& dense_layers() const { return dense_; }
    const std::vector<PredictionHead>& heads() const { return heads_; }
    /// Parameters excluding embedding tables (the quantity param_count reports).
    std::size_t backbone_and_head_params() const;

private:
    ModelConfig config_;
    FeatureSchema schema_;
    ParameterStore params_;
    std::vector<Parameter*> embeddings_;
    std::vector<SSRLayer> layers_;
    std::vector<DenseLayer> dense_;
    std::vector<PredictionHead> heads_;
};

}  // namespace ssr
