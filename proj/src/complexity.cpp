#include "ssr/complexity.hpp"

namespace ssr {

ParamBreakdown& ParamBreakdown::operator+=(const ParamBreakdown& o) {
    projection += o.projection;
    ics += o.ics;
    fusion_weights += o.fusion_weights;
    fusion_bias += o.fusion_bias;
    layer_norm += o.layer_norm;
    dense += o.dense;
    heads += o.heads;
    return *this;
}

ParamBreakdown layer_param_count(const SSRLayerConfig& layer, std::size_t d_in) {
    ParamBreakdown p;
    const std::size_t b = layer.views, dv = layer.view_dim, ds = layer.effective_view_dim_star();
    if (layer.has_projection())
        p.projection = b * d_in * (layer.filter == FilterKind::DenseProjection ? dv : ds);
    if (layer.filter == FilterKind::Dynamic) p.ics = b * (layer.ics_iterations + (layer.ics_gamma ? ds : 0));
    p.fusion_weights = b * layer.filtered_width(d_in) * dv;
    p.fusion_bias = b * dv;
    if (layer.layer_norm_affine) p.layer_norm = 2 * b * dv;
    return p;
}

std::size_t dense_layer_param_count(std::size_t in, std::size_t out) { return in * out + out; }

ParamBreakdown param_count(const ModelConfig& model, std::size_t d_in) {
    ParamBreakdown total;
    std::size_t width = d_in;
    if (model.backbone == Backbone::DenseMlp) {
        for (std::size_t w : model.mlp_widths()) {
            total.dense += dense_layer_param_count(width, w);
            width = w;
        }
    } else {
        for (const auto& layer : model.layer_configs()) {
            total += layer_param_count(layer, width);
            width = layer.output_width();
        }
    }
    total.heads = model.tasks.size() * (width + 1);
    return total;
}

std::uint64_t layer_flop_count(const SSRLayerConfig& layer, std::size_t d_in, std::size_t batch) {
    const std::uint64_t n = batch, b = layer.views, dv = layer.view_dim, ds = layer.effective_view_dim_star();
    std::uint64_t per_view = 0;
    switch (layer.filter) {
        case FilterKind::Static: break;
        case FilterKind::Dropout: break;
        case FilterKind::Dynamic:
            per_view += 2 * n * d_in * ds;
            per_view += n * ds * (1 + 3 * layer.ics_iterations + (layer.ics_gamma ? 1 : 0));
            break;
        case FilterKind::TopKSte: per_view += 2 * n * d_in * ds + n * ds; break;
        case FilterKind::DenseProjection: per_view += 2 * n * d_in * dv; break;
    }
    per_view += 2 * n * layer.filtered_width(d_in) * dv;  // fusion matmul
    per_view += n * dv;                                   // bias
    per_view += n * dv;                                   // activation
    per_view += 6 * n * dv;                               // layer norm
    std::uint64_t total = b * per_view;
    if (layer.is_final) total += b * n * dv;  // averaging
    return total;
}

std::uint64_t flop_count(const ModelConfig& model, std::size_t d_in, std::size_t batch) {
    std::uint64_t total = 0;
    std::size_t width = d_in;
    const std::uint64_t n = batch;
    if (model.backbone == Backbone::DenseMlp) {
        for (std::size_t w : model.mlp_widths()) {
            total += 2 * n * width * w + n * w + n * w;  // matmul, bias, activation
            width = w;
        }
    } else {
        for (const auto& layer : model.layer_configs()) {
            total += layer_flop_count(layer, width, batch);
            width = layer.output_width();
        }
    }
    total += model.tasks.size() * (2 * n * width + n + n);  // head matmul, bias, sigmoid
    return total;
}

}  // namespace ssr
