#include "ssr/model.hpp"

#include "ssr/error.hpp"

namespace ssr {

namespace {

constexpr double kEmbeddingInit = 0.05;

}  // namespace

Model::Model(const ModelConfig& config, const FeatureSchema& schema,
             const std::vector<std::optional<ViewSelection>>& selections)
    : config_(config), schema_(schema) {
    config_.validate();
    if (schema_.n_fields() == 0) throw ConfigError("feature schema has no fields");
    for (std::size_t f = 0; f < schema_.n_fields(); ++f)
        if (schema_.vocab_sizes[f] < 1) throw ConfigError("field " + std::to_string(f) + " has an empty vocabulary");

    Rng emb_rng(mix_seed(config_.seed, 0xe3b));
    for (std::size_t f = 0; f < schema_.n_fields(); ++f) {
        Tensor t({schema_.vocab_sizes[f], config_.embedding_dim});
        for (auto& v : t.values()) v = emb_rng.uniform(-kEmbeddingInit, kEmbeddingInit);
        embeddings_.push_back(&params_.add("emb.f" + std::to_string(f), std::move(t)));
    }

    std::size_t width = input_width();
    if (config_.backbone == Backbone::DenseMlp) {
        Rng rng(mix_seed(config_.seed, 0xd3e5e));
        const auto widths = config_.mlp_widths();
        for (std::size_t l = 0; l < widths.size(); ++l) {
            const std::string p = "mlp" + std::to_string(l);
            DenseLayer d;
            d.weight = &params_.add(p + ".W", glorot_uniform(width, widths[l], rng));
            d.bias = &params_.add(p + ".b", Tensor({widths[l]}));
            dense_.push_back(d);
            width = widths[l];
        }
    } else {
        const auto cfgs = config_.layer_configs();
        if (!selections.empty() && selections.size() != cfgs.size())
            throw ConfigError("expected " + std::to_string(cfgs.size()) + " view selections, got " +
                              std::to_string(selections.size()));
        layers_.reserve(cfgs.size());
        for (std::size_t l = 0; l < cfgs.size(); ++l) {
            try {
                cfgs[l].validate(width);
            } catch (const ConfigError& e) {
                const std::string from = l == 0 ? "embeddings" : "layer" + std::to_string(l - 1);
                throw ConfigError(from + " -> layer" + std::to_string(l) + ": " + e.what());
            }
            layers_.emplace_back(cfgs[l], width, params_, "layer" + std::to_string(l), mix_seed(config_.seed, l),
                                 selections.empty() ? std::nullopt : selections[l]);
            width = layers_.back().output_width();
        }
    }

    Rng head_rng(mix_seed(config_.seed, 0x4ead));
    for (const auto& task : config_.tasks) heads_.push_back(PredictionHead::create(params_, task, width, head_rng));
}

Var Model::embed(Tape& tape, std::span<const std::uint32_t> ids, std::size_t n) const {
    const std::size_t nf = schema_.n_fields();
    if (ids.size() != n * nf)
        throw DimensionError("expected " + std::to_string(n * nf) + " ids for " + std::to_string(n) + " rows, got " +
                             std::to_string(ids.size()));
    std::vector<Var> parts;
    std::vector<std::uint32_t> column(n);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t r = 0; r < n; ++r) column[r] = ids[r * nf + f];
        parts.push_back(embedding_lookup(tape.param(*embeddings_[f]), column));
    }
    return parts.size() == 1 ? parts[0] : concat_last_axis(parts);
}

Var Model::backbone(Var x, const LayerForwardContext& ctx, std::vector<LayerCapture>* captures) const {
    Tape& tape = *x.tape;
    if (config_.backbone == Backbone::DenseMlp) {
        for (const auto& d : dense_)
            x = activate(add_bias(matmul(x, tape.param(*d.weight)), tape.param(*d.bias)), config_.activation);
        return x;
    }
    if (captures) captures->assign(layers_.size(), LayerCapture{});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        LayerForwardContext c = ctx;
        if (captures) {
            (*captures)[l].want_traces = ctx.capture ? ctx.capture->want_traces : true;
            c.capture = &(*captures)[l];
        } else {
            c.capture = nullptr;
        }
        x = layers_[l].forward(x, c);
    }
    return x;
}

std::vector<Var> Model::forward(Tape& tape, std::span<const std::uint32_t> ids, std::size_t n,
                                const LayerForwardContext& ctx, std::vector<LayerCapture>* captures) const {
    Var z = backbone(embed(tape, ids, n), ctx, captures);
    std::vector<Var> out;
    for (const auto& h : heads_) out.push_back(h.logits(z));
    return out;
}

std::size_t Model::backbone_and_head_params() const {
    std::size_t total = params_.total_numel();
    for (const Parameter* e : embeddings_) total -= e->value.numel();
    return total;
}

}  // namespace ssr
