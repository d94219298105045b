#include "ssr/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "ssr/analysis.hpp"
#include "ssr/complexity.hpp"
#include "ssr/error.hpp"
#include "ssr/train.hpp"

namespace ssr {

namespace {

std::string fmt(double v) { return nlohmann::json(v).dump(); }

std::size_t as_count(double v, const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(std::string(what) + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"model", c.model},
                       {"train", c.train},
                       {"data", c.data},
                       {"split", {{"fractions", c.split_fractions}, {"seed", c.split_seed}}}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "model" && it.key() != "train" && it.key() != "data" && it.key() != "split")
            throw ConfigError("unknown configuration section '" + it.key() + "'");
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    if (j.contains("data")) c.data = j.at("data").get<SyntheticSpec>();
    if (j.contains("split")) {
        const auto& s = j.at("split");
        for (auto it = s.begin(); it != s.end(); ++it)
            if (it.key() != "fractions" && it.key() != "seed")
                throw ConfigError("unknown key '" + it.key() + "' in split section");
        try {
            if (s.contains("fractions")) c.split_fractions = s.at("fractions").get<std::vector<double>>();
            if (s.contains("seed")) c.split_seed = s.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad split section: ") + e.what());
        }
    }
    c.model.validate();
    c.train.validate();
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open configuration " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("configuration " + path.string() + " is not valid JSON: " + e.what());
    }
    return j.get<RunConfig>();
}

PreparedData prepare(const Dataset& data) {
    PreparedData p;
    p.encoder = FeatureEncoder::fit(data);
    p.train = p.encoder.transform(data.subset(Split::Train));
    p.val = p.encoder.transform(data.subset(Split::Val));
    p.test = p.encoder.transform(data.subset(Split::Test));
    return p;
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Views: return "views";
        case SweepAxis::Width: return "width";
        case SweepAxis::Depth: return "depth";
        case SweepAxis::Iterations: return "iterations";
        case SweepAxis::Alpha: return "alpha";
        case SweepAxis::Gamma: return "gamma";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    for (auto a : {SweepAxis::Views, SweepAxis::Width, SweepAxis::Depth, SweepAxis::Iterations, SweepAxis::Alpha,
                   SweepAxis::Gamma})
        if (to_string(a) == s) return a;
    throw ConfigError("unknown sweep axis '" + s + "' (expected views, width, depth, iterations, alpha or gamma)");
}

ModelConfig apply_axis(const ModelConfig& base, SweepAxis axis, double value) {
    ModelConfig c = base;
    switch (axis) {
        case SweepAxis::Views: c.views = as_count(value, "views"); break;
        case SweepAxis::Width: c.view_dim = as_count(value, "width"); break;
        case SweepAxis::Depth: c.depth = as_count(value, "depth"); break;
        case SweepAxis::Iterations: c.ics_iterations = as_count(value, "iterations"); break;
        case SweepAxis::Alpha:
            if (!(value > 0.0)) throw ConfigError("alpha must be positive");
            c.ics_alpha_init = value;
            break;
        case SweepAxis::Gamma: c.ics_gamma = value != 0.0; break;
    }
    return c;
}

SweepResult run_sweep(SweepAxis axis, const std::vector<double>& grid, const ModelConfig& base,
                      const TrainConfig& train_config, const PreparedData& data, std::size_t probe_size) {
    if (grid.empty()) throw ConfigError("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
    const FeatureSchema schema = data.schema();
    const EncodedData probe = make_probe(data.val, probe_size, mix_seed(train_config.seed, 0x9e0be));
    SweepResult result;
    result.axis = axis;
    for (double value : grid) {
        SweepPoint pt;
        pt.value = value;
        try {
            const ModelConfig cfg = apply_axis(base, axis, value);
            Model model(cfg, schema);
            pt.params = param_count(cfg, model.input_width()).total();
            pt.flops = flop_count(cfg, model.input_width());
            const MetricsReport rep = train(model, data.train, data.val, train_config);
            pt.val_auc = rep.auc;
            pt.val_logloss = rep.logloss;
            pt.sparsity = mean_filter_sparsity(model, probe);
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        result.points.push_back(std::move(pt));
    }
    return result;
}

void write_sweep_csv(const SweepResult& r, std::ostream& os) {
    os << "axis,value,status,params,flops,val_auc,val_logloss,sparsity,error\n";
    for (const auto& p : r.points) {
        os << to_string(r.axis) << ',' << fmt(p.value) << ',' << (p.ok ? "ok" : "failed") << ',';
        if (p.ok) {
            os << p.params << ',' << p.flops << ',' << fmt(p.val_auc) << ',' << fmt(p.val_logloss) << ','
               << fmt(p.sparsity) << ",\n";
        } else {
            std::string msg = p.error;
            for (char& c : msg)
                if (c == ',' || c == '\n') c = ';';
            os << ",,,,," << msg << '\n';
        }
    }
}

ModelConfig match_budget(ModelConfig cfg, std::size_t d_in, std::size_t target, bool fix_views, double tolerance) {
    auto ratio = [&](const ModelConfig& c) {
        return static_cast<double>(param_count(c, d_in).total()) / static_cast<double>(target);
    };
    auto search_width = [&](ModelConfig c) {
        ModelConfig best = c;
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t dv = 1; dv <= 4 * d_in; ++dv) {
            c.view_dim = dv;
            try {
                std::size_t width = d_in;
                for (const auto& l : c.layer_configs()) {
                    l.validate(width);
                    width = l.output_width();
                }
                const double gap = std::abs(ratio(c) - 1.0);
                if (gap < best_gap) {
                    best_gap = gap;
                    best = c;
                }
            } catch (const ConfigError&) {
            }
        }
        return std::pair{best, best_gap};
    };
    auto [best, gap] = search_width(cfg);
    if (gap <= tolerance || fix_views) return best;
    const std::size_t base_views = cfg.views;
    for (std::size_t b = 1; b <= 4 * base_views; ++b) {
        ModelConfig c = cfg;
        c.views = b;
        auto [cand, g] = search_width(c);
        if (g < gap) {
            best = cand;
            gap = g;
        }
        if (gap <= tolerance) break;
    }
    return best;
}

std::vector<AblationRow> ablation_variants(const ModelConfig& base, std::size_t d_in, double tolerance) {
    if (base.backbone != Backbone::SsrDynamic) throw ConfigError("the ablation base model must be ssr_dynamic");
    const std::size_t target = param_count(base, d_in).total();
    std::vector<AblationRow> rows;
    auto add = [&](const std::string& name, ModelConfig cfg) {
        AblationRow r;
        r.variant = name;
        r.config = std::move(cfg);
        r.params = param_count(r.config, d_in).total();
        r.budget_ratio = static_cast<double>(r.params) / static_cast<double>(target);
        rows.push_back(std::move(r));
    };
    add("full", base);
    ModelConfig c = base;
    c.backbone = Backbone::SsrUnfiltered;
    add("no_sparse_filtering", match_budget(c, d_in, target, true, tolerance));
    c = base;
    c.views = 1;
    c.view_dim_star = 0;
    add("single_view", match_budget(c, d_in, target, true, tolerance));
    c = base;
    c.backbone = Backbone::SsrStatic;
    add("static", match_budget(c, d_in, target, false, tolerance));
    c = base;
    c.backbone = Backbone::SsrTopkSte;
    add("ste_topk", c);
    c = base;
    c.backbone = Backbone::SsrDropout;
    add("dropout", match_budget(c, d_in, target, false, tolerance));
    return rows;
}

std::vector<AblationRow> run_ablation_suite(const ModelConfig& base, const TrainConfig& train_config,
                                            const PreparedData& data, const std::vector<std::uint64_t>& seeds,
                                            double tolerance) {
    if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
    const FeatureSchema schema = data.schema();
    const std::size_t d_in = schema.n_fields() * base.embedding_dim;
    auto rows = ablation_variants(base, d_in, tolerance);
    for (auto& row : rows) {
        for (std::uint64_t seed : seeds) {
            ModelConfig mc = row.config;
            mc.seed = seed;
            TrainConfig tc = train_config;
            tc.seed = seed;
            Model model(mc, schema);
            row.aucs.push_back(train(model, data.train, data.val, tc).auc);
        }
        double s = 0.0;
        for (double a : row.aucs) s += a;
        row.mean_auc = s / static_cast<double>(row.aucs.size());
    }
    for (auto& row : rows) row.delta_auc = row.mean_auc - rows.front().mean_auc;
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& os) {
    os << "variant,backbone,views,view_dim,params,budget_ratio,mean_val_auc,delta_auc,seed_aucs\n";
    for (const auto& r : rows) {
        os << r.variant << ',' << to_string(r.config.backbone) << ',' << r.config.views << ',' << r.config.view_dim
           << ',' << r.params << ',' << fmt(r.budget_ratio) << ',' << fmt(r.mean_auc) << ',' << fmt(r.delta_auc)
           << ',';
        for (std::size_t i = 0; i < r.aucs.size(); ++i) os << (i ? ";" : "") << fmt(r.aucs[i]);
        os << '\n';
    }
}

}  // namespace ssr
