#include "ssr/ssr_layer.hpp"

#include <cmath>

#include "ssr/error.hpp"

namespace ssr {

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (auto& v : w.values()) v = rng.uniform(-bound, bound);
    return w;
}

Var activate(Var x, Activation a) { return a == Activation::Gelu ? gelu(x) : relu(x); }

SSRLayer::SSRLayer(const SSRLayerConfig& config, std::size_t d_in, ParameterStore& store, const std::string& prefix,
                   std::uint64_t seed, std::optional<ViewSelection> selection)
    : config_(config), d_in_(d_in) {
    config_.validate(d_in);
    const std::size_t b = config_.views, dv = config_.view_dim;
    if (config_.filter == FilterKind::Static) {
        if (selection) {
            if (selection->d_in != d_in || selection->view_count() != b || selection->view_width() != dv)
                throw ConfigError(prefix + ": stored selection does not match the layer shape");
            selection_ = std::move(selection);
        } else {
            selection_ = sample_views(d_in, dv, b, mix_seed(seed, 0x5e1ec7));
        }
    }
    Rng rng(mix_seed(seed, 0x1417));
    const std::size_t hw = config_.filtered_width(d_in);
    views_.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
        ViewParams& v = views_[i];
        const std::string vp = prefix + ".view" + std::to_string(i);
        if (config_.has_projection()) {
            const std::size_t pw = config_.filter == FilterKind::DenseProjection ? dv : config_.effective_view_dim_star();
            v.projection = &store.add(vp + ".proj", glorot_uniform(d_in, pw, rng));
        }
        if (config_.filter == FilterKind::Dynamic)
            v.ics = make_ics_params(store, vp, config_.ics_iterations, config_.effective_view_dim_star(),
                                    config_.ics_alpha_init, config_.ics_gamma);
        v.fusion = &store.add(vp + ".V", glorot_uniform(hw, dv, rng));
        v.bias = &store.add(vp + ".bias", Tensor({dv}, 0.0));
        if (config_.layer_norm_affine) {
            v.ln_scale = &store.add(vp + ".ln_scale", Tensor({dv}, 1.0));
            v.ln_shift = &store.add(vp + ".ln_shift", Tensor({dv}, 0.0));
        }
    }
}

Var SSRLayer::filter(Var x, std::size_t view, const LayerForwardContext& ctx, IcsTrace* trace) const {
    Tape& tape = *x.tape;
    const ViewParams& v = views_[view];
    switch (config_.filter) {
        case FilterKind::Static: return apply_filter(x, *selection_, view);
        case FilterKind::Dynamic: return ics_forward(matmul(x, tape.param(*v.projection)), v.ics, trace);
        case FilterKind::TopKSte: return ste_topk(matmul(x, tape.param(*v.projection)), config_.effective_topk());
        case FilterKind::DenseProjection: return matmul(x, tape.param(*v.projection));
        case FilterKind::Dropout: {
            if (!ctx.training) return x;
            if (!ctx.rng) throw ContractError("dropout filter needs a random generator in training mode");
            const double p = config_.effective_dropout(d_in_);
            const double keep_scale = 1.0 / (1.0 - p);
            Tensor mask(x.shape());
            for (auto& m : mask.values()) m = ctx.rng->uniform() < p ? 0.0 : keep_scale;
            return mul_const(x, mask);
        }
    }
    throw ContractError("unknown filter kind");
}

Var SSRLayer::forward(Var x, const LayerForwardContext& ctx) const {
    if (x.value().rank() != 2 || x.value().cols() != d_in_)
        throw DimensionError("SSR layer expects input [n x " + std::to_string(d_in_) + "], got " +
                             shape_str(x.shape()));
    Tape& tape = *x.tape;
    LayerCapture* cap = ctx.capture;
    if (cap) {
        cap->filtered.clear();
        cap->fused.clear();
        cap->activated.clear();
        cap->traces.clear();
    }
    std::vector<Var> outputs;
    outputs.reserve(views_.size());
    for (std::size_t i = 0; i < views_.size(); ++i) {
        const ViewParams& v = views_[i];
        IcsTrace trace;
        const bool want_trace = cap && cap->want_traces && config_.filter == FilterKind::Dynamic;
        Var h = filter(x, i, ctx, want_trace ? &trace : nullptr);
        Var fused = add_bias(matmul(h, tape.param(*v.fusion)), tape.param(*v.bias));
        Var z = activate(fused, config_.activation);
        Var normed = config_.layer_norm_affine
                         ? layer_norm(z, tape.param(*v.ln_scale), tape.param(*v.ln_shift), config_.layer_norm_eps)
                         : layer_norm(z, config_.layer_norm_eps);
        if (cap) {
            cap->filtered.push_back(h);
            cap->fused.push_back(fused);
            cap->activated.push_back(z);
            if (want_trace) cap->traces.push_back(std::move(trace));
        }
        outputs.push_back(normed);
    }
    return config_.is_final ? average(outputs) : concat_last_axis(outputs);
}

PredictionHead PredictionHead::create(ParameterStore& store, const std::string& task, std::size_t d_v, Rng& rng) {
    PredictionHead h;
    h.task = task;
    h.weight = &store.add("head." + task + ".W", glorot_uniform(d_v, 1, rng));
    h.bias = &store.add("head." + task + ".b", Tensor({1}, 0.0));
    return h;
}

Var PredictionHead::logits(Var zbar) const {
    Tape& tape = *zbar.tape;
    const std::size_t dv = weight->value.shape()[0];
    if (zbar.value().rank() != 2 || zbar.value().cols() != dv)
        throw DimensionError("prediction head expects [n x " + std::to_string(dv) + "], got " + shape_str(zbar.shape()));
    Var out = add_bias(matmul(zbar, tape.param(*weight)), tape.param(*bias));
    return reshape(out, {out.value().rows()});
}

Var PredictionHead::predict(Var zbar) const { return sigmoid(logits(zbar)); }

}  // namespace ssr
