#pragma once

#include <cstdint>

#include "ssr/config.hpp"

// Closed-form parameter and FLOP accounting for the backbone and heads.
// Embedding tables are excluded. FLOP conventions (batch = 1 inference):
//   matmul m x k x n   2mkn
//   gather, concat     0
//   elementwise        n   (activations, bias add, gamma scaling, masks)
//   mean / average     n   (elements read)
//   layer norm         6n
//   ICS                n (rectify) + T * 3n (mean, subtract, rectify) + n (gamma)
//   hard top-k         n
// Dropout is the identity at inference and costs nothing.

namespace ssr {

struct ParamBreakdown {
    std::size_t projection = 0;      // W_proj of projection filters
    std::size_t ics = 0;             // extinction rates and recovery scales
    std::size_t fusion_weights = 0;  // V_i
    std::size_t fusion_bias = 0;     // bias_i
    std::size_t layer_norm = 0;      // affine scale/shift
    std::size_t dense = 0;           // dense MLP weights + biases
    std::size_t heads = 0;           // prediction heads

    std::size_t backbone() const { return projection + ics + fusion_weights + fusion_bias + layer_norm + dense; }
    std::size_t total() const { return backbone() + heads; }
    ParamBreakdown& operator+=(const ParamBreakdown& o);
};

ParamBreakdown layer_param_count(const SSRLayerConfig& layer, std::size_t d_in);
std::size_t dense_layer_param_count(std::size_t in, std::size_t out);
/// Backbone plus heads for a model fed `d_in` embedded inputs.
ParamBreakdown param_count(const ModelConfig& model, std::size_t d_in);

std::uint64_t layer_flop_count(const SSRLayerConfig& layer, std::size_t d_in, std::size_t batch = 1);
std::uint64_t flop_count(const ModelConfig& model, std::size_t d_in, std::size_t batch = 1);

}  // namespace ssr
