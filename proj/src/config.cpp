#include "ssr/config.hpp"

#include <algorithm>

#include "ssr/error.hpp"

namespace ssr {

std::string to_string(FilterKind k) {
    switch (k) {
        case FilterKind::Static: return "static";
        case FilterKind::Dynamic: return "dynamic";
        case FilterKind::TopKSte: return "topk_ste";
        case FilterKind::Dropout: return "dropout";
        case FilterKind::DenseProjection: return "dense_projection";
    }
    return "?";
}

std::string to_string(Activation a) { return a == Activation::Gelu ? "gelu" : "relu"; }

std::string to_string(Backbone b) {
    switch (b) {
        case Backbone::SsrStatic: return "ssr_static";
        case Backbone::SsrDynamic: return "ssr_dynamic";
        case Backbone::SsrTopkSte: return "ssr_topk_ste";
        case Backbone::SsrDropout: return "ssr_dropout";
        case Backbone::SsrUnfiltered: return "ssr_unfiltered";
        case Backbone::DenseMlp: return "dense_mlp";
    }
    return "?";
}

Backbone backbone_from_string(const std::string& s) {
    for (auto b : {Backbone::SsrStatic, Backbone::SsrDynamic, Backbone::SsrTopkSte, Backbone::SsrDropout,
                   Backbone::SsrUnfiltered, Backbone::DenseMlp})
        if (to_string(b) == s) return b;
    throw ConfigError("unknown backbone '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
    if (s == "gelu") return Activation::Gelu;
    if (s == "relu") return Activation::Relu;
    throw ConfigError("unknown activation '" + s + "'");
}

double SSRLayerConfig::effective_dropout(std::size_t d_in) const {
    if (dropout_rate >= 0.0) return dropout_rate;
    return d_in ? 1.0 - static_cast<double>(view_dim) / static_cast<double>(d_in) : 0.0;
}

std::size_t SSRLayerConfig::filtered_width(std::size_t d_in) const {
    switch (filter) {
        case FilterKind::Static: return view_dim;
        case FilterKind::Dynamic:
        case FilterKind::TopKSte: return effective_view_dim_star();
        case FilterKind::Dropout: return d_in;
        case FilterKind::DenseProjection: return view_dim;
    }
    return view_dim;
}

void SSRLayerConfig::validate(std::size_t d_in) const {
    if (views < 1) throw ConfigError("layer needs at least one view");
    if (view_dim < 1) throw ConfigError("view width must be positive");
    if (filter == FilterKind::Static && view_dim > d_in)
        throw ConfigError("static view width " + std::to_string(view_dim) + " exceeds input width " +
                          std::to_string(d_in));
    if ((filter == FilterKind::Dynamic || filter == FilterKind::TopKSte) && effective_view_dim_star() < view_dim)
        throw ConfigError("dynamic operating width d_v*=" + std::to_string(effective_view_dim_star()) +
                          " is smaller than d_v=" + std::to_string(view_dim));
    if (filter == FilterKind::TopKSte && (effective_topk() < 1 || effective_topk() > effective_view_dim_star()))
        throw ConfigError("top-k k outside [1, d_v*]");
    if (filter == FilterKind::Dropout) {
        const double p = effective_dropout(d_in);
        if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    }
    if (!(ics_alpha_init > 0.0)) throw ConfigError("initial extinction rate must be positive");
    if (!(layer_norm_eps > 0.0)) throw ConfigError("layer-norm eps must be positive");
}

FilterKind ModelConfig::filter_kind() const {
    switch (backbone) {
        case Backbone::SsrStatic: return FilterKind::Static;
        case Backbone::SsrDynamic: return FilterKind::Dynamic;
        case Backbone::SsrTopkSte: return FilterKind::TopKSte;
        case Backbone::SsrDropout: return FilterKind::Dropout;
        case Backbone::SsrUnfiltered: return FilterKind::DenseProjection;
        case Backbone::DenseMlp: break;
    }
    throw ConfigError("dense_mlp backbone has no SSR layers");
}

std::vector<SSRLayerConfig> ModelConfig::layer_configs() const {
    std::vector<SSRLayerConfig> out;
    if (backbone == Backbone::DenseMlp) return out;
    for (std::size_t l = 0; l < depth; ++l) {
        SSRLayerConfig c;
        c.filter = filter_kind();
        c.views = views;
        c.view_dim = view_dim;
        c.view_dim_star = view_dim_star;
        c.activation = activation;
        c.is_final = l + 1 == depth;
        c.ics_iterations = ics_iterations;
        c.ics_alpha_init = ics_alpha_init;
        c.ics_gamma = ics_gamma;
        c.topk_k = topk_k;
        c.dropout_rate = dropout_rate;
        c.layer_norm_affine = layer_norm_affine;
        out.push_back(c);
    }
    return out;
}

std::vector<std::size_t> ModelConfig::mlp_widths() const {
    if (!mlp_hidden.empty()) return mlp_hidden;
    std::vector<std::size_t> w(depth, views * view_dim);
    if (!w.empty()) w.back() = view_dim;
    return w;
}

void ModelConfig::validate() const {
    if (depth < 1) throw ConfigError("model depth must be at least 1");
    if (embedding_dim < 1) throw ConfigError("embedding dimension must be positive");
    if (tasks.empty()) throw ConfigError("model needs at least one prediction head");
    if (backbone == Backbone::DenseMlp) {
        for (auto w : mlp_widths())
            if (w < 1) throw ConfigError("dense layer width must be positive");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || batch_size < 1 || max_epochs < 1 || patience < 1 || !(beta1 > 0.0 && beta1 < 1.0) ||
        !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0) || eval_batch_size < 1)
        throw ConfigError("training configuration values must be positive (betas in (0,1), patience >= 1)");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"backbone", to_string(c.backbone)},
                       {"depth", c.depth},
                       {"views", c.views},
                       {"view_dim", c.view_dim},
                       {"view_dim_star", c.view_dim_star},
                       {"activation", to_string(c.activation)},
                       {"ics_iterations", c.ics_iterations},
                       {"ics_alpha_init", c.ics_alpha_init},
                       {"ics_gamma", c.ics_gamma},
                       {"topk_k", c.topk_k},
                       {"dropout_rate", c.dropout_rate},
                       {"layer_norm_affine", c.layer_norm_affine},
                       {"mlp_hidden", c.mlp_hidden},
                       {"embedding_dim", c.embedding_dim},
                       {"tasks", c.tasks},
                       {"seed", c.seed}};
}

namespace {
template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            it->get_to(out);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const char* section) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError(std::string("unknown key '") + it.key() + "' in " + section + " configuration");
    }
}
}  // namespace

void from_json(const nlohmann::json& j, ModelConfig& c) {
    reject_unknown(j,
                   {"backbone", "depth", "views", "view_dim", "view_dim_star", "activation", "ics_iterations",
                    "ics_alpha_init", "ics_gamma", "topk_k", "dropout_rate", "layer_norm_affine", "mlp_hidden",
                    "embedding_dim", "tasks", "seed"},
                   "model");
    if (auto it = j.find("backbone"); it != j.end()) c.backbone = backbone_from_string(it->get<std::string>());
    if (auto it = j.find("activation"); it != j.end()) c.activation = activation_from_string(it->get<std::string>());
    read(j, "depth", c.depth);
    read(j, "views", c.views);
    read(j, "view_dim", c.view_dim);
    read(j, "view_dim_star", c.view_dim_star);
    read(j, "ics_iterations", c.ics_iterations);
    read(j, "ics_alpha_init", c.ics_alpha_init);
    read(j, "ics_gamma", c.ics_gamma);
    read(j, "topk_k", c.topk_k);
    read(j, "dropout_rate", c.dropout_rate);
    read(j, "layer_norm_affine", c.layer_norm_affine);
    read(j, "mlp_hidden", c.mlp_hidden);
    read(j, "embedding_dim", c.embedding_dim);
    read(j, "tasks", c.tasks);
    read(j, "seed", c.seed);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                       {"max_epochs", c.max_epochs},       {"patience", c.patience},
                       {"beta1", c.beta1},                 {"beta2", c.beta2},
                       {"epsilon", c.epsilon},             {"seed", c.seed},
                       {"eval_batch_size", c.eval_batch_size}, {"record_timing", c.record_timing}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    reject_unknown(j,
                   {"learning_rate", "batch_size", "max_epochs", "patience", "beta1", "beta2", "epsilon", "seed",
                    "eval_batch_size", "record_timing"},
                   "train");
    read(j, "learning_rate", c.learning_rate);
    read(j, "batch_size", c.batch_size);
    read(j, "max_epochs", c.max_epochs);
    read(j, "patience", c.patience);
    read(j, "beta1", c.beta1);
    read(j, "beta2", c.beta2);
    read(j, "epsilon", c.epsilon);
    read(j, "seed", c.seed);
    read(j, "eval_batch_size", c.eval_batch_size);
    read(j, "record_timing", c.record_timing);
}

}  // namespace ssr
