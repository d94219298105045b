#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace ssr {

enum class FilterKind {
    Static,           // fixed random gather
    Dynamic,          // projection + iterative competitive sparsification
    TopKSte,          // projection + hard top-k with straight-through gradient
    Dropout,          // keep-rate-matched random masking of the full input
    DenseProjection,  // projection to d_v with no sparsification
};

enum class Activation { Gelu, Relu };

enum class Backbone { SsrStatic, SsrDynamic, SsrTopkSte, SsrDropout, SsrUnfiltered, DenseMlp };

std::string to_string(FilterKind k);
std::string to_string(Activation a);
std::string to_string(Backbone b);
Backbone backbone_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

struct SSRLayerConfig {
    FilterKind filter = FilterKind::Dynamic;
    std::size_t views = 4;          // b
    std::size_t view_dim = 16;      // d_v
    std::size_t view_dim_star = 0;  // d_v*; 0 means 2 * d_v
    Activation activation = Activation::Gelu;
    bool is_final = false;
    std::size_t ics_iterations = 5;
    double ics_alpha_init = 0.1;
    bool ics_gamma = true;
    std::size_t topk_k = 0;       // 0 means d_v
    double dropout_rate = -1.0;   // negative means 1 - d_v / d_in
    bool layer_norm_affine = true;
    double layer_norm_eps = 1e-5;

    std::size_t effective_view_dim_star() const { return view_dim_star ? view_dim_star : 2 * view_dim; }
    std::size_t effective_topk() const { return topk_k ? topk_k : view_dim; }
    double effective_dropout(std::size_t d_in) const;
    /// Width of h_i, the input of the view's fusion matrix.
    std::size_t filtered_width(std::size_t d_in) const;
    bool has_projection() const {
        return filter == FilterKind::Dynamic || filter == FilterKind::TopKSte || filter == FilterKind::DenseProjection;
    }
    std::size_t output_width() const { return is_final ? view_dim : views * view_dim; }
    /// Throws ConfigError when the layer cannot consume `d_in` inputs.
    void validate(std::size_t d_in) const;
};

struct ModelConfig {
    Backbone backbone = Backbone::SsrDynamic;
    std::size_t depth = 2;
    std::size_t views = 4;
    std::size_t view_dim = 16;
    std::size_t view_dim_star = 0;
    Activation activation = Activation::Gelu;
    std::size_t ics_iterations = 5;
    double ics_alpha_init = 0.1;
    bool ics_gamma = true;
    std::size_t topk_k = 0;
    double dropout_rate = -1.0;
    bool layer_norm_affine = true;
    /// Dense MLP hidden widths; empty means `depth` layers of width views*view_dim
    /// with the last one of width view_dim.
    std::vector<std::size_t> mlp_hidden;
    std::size_t embedding_dim = 16;
    std::vector<std::string> tasks{"click"};
    std::uint64_t seed = 1;

    FilterKind filter_kind() const;
    /// Expanded per-layer configuration; the last layer is final (averaging).
    std::vector<SSRLayerConfig> layer_configs() const;
    std::vector<std::size_t> mlp_widths() const;
    void validate() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 1024;
    std::size_t max_epochs = 10;
    std::size_t patience = 3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
    std::size_t eval_batch_size = 4096;
    /// Adds wall-clock seconds to epoch records (makes metrics files non-reproducible).
    bool record_timing = false;

    void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace ssr
