#include "ssr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "ssr/error.hpp"
#include "ssr/ics.hpp"
#include "ssr/train.hpp"

namespace ssr {

namespace {

std::string fmt(double v) {
    nlohmann::json j = v;
    return j.dump();
}

bool has_dynamic(const Model& model) {
    return std::any_of(model.layers().begin(), model.layers().end(),
                       [](const SSRLayer& l) { return l.config().filter == FilterKind::Dynamic; });
}

}  // namespace

SparsityReport weight_sparsity(const Tensor& w, double threshold, double quantile, PowerMeasure power) {
    if (!(threshold >= 0.0)) throw ContractError("sparsity threshold must be non-negative");
    if (!(quantile > 0.0 && quantile <= 1.0)) throw ContractError("mass quantile must lie in (0, 1]");
    if (w.numel() == 0) throw ReportError("weight matrix is empty");
    SparsityReport r;
    r.threshold = threshold;
    r.quantile = quantile;
    r.power = power;
    std::size_t near_zero = 0;
    for (double v : w.values())
        if (std::abs(v) < threshold) ++near_zero;
    r.near_zero_fraction = static_cast<double>(near_zero) / static_cast<double>(w.numel());

    const std::size_t dims = w.rank() <= 1 ? w.numel() : w.rows();
    const std::size_t width = w.numel() / dims;
    std::vector<double> p(dims, 0.0);
    for (std::size_t d = 0; d < dims; ++d)
        for (std::size_t k = 0; k < width; ++k) {
            const double v = w[d * width + k];
            p[d] += power == PowerMeasure::L1 ? std::abs(v) : v * v;
        }
    std::sort(p.begin(), p.end(), std::greater<>());
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (total == 0.0) {
        r.mass_concentration = 0.0;
        return r;
    }
    double acc = 0.0;
    std::size_t k = 0;
    while (k < dims && acc < quantile * total) acc += p[k++];
    r.mass_concentration = static_cast<double>(k) / static_cast<double>(dims);
    return r;
}

SparsityReport report_weight_sparsity(const Model& model, const std::string& matrix, double threshold,
                                      double quantile, PowerMeasure power) {
    const ParameterStore& store = model.params();
    std::string name = matrix;
    if (name.empty()) name = model.config().backbone == Backbone::DenseMlp ? "mlp0.W" : "layer0.view0.V";
    const Parameter* p = store.find(name);
    if (!p || p->value.rank() != 2) {
        std::string available;
        for (std::size_t i = 0; i < store.size(); ++i)
            if (store[i].value.rank() == 2) available += (available.empty() ? "" : ", ") + store[i].name;
        throw ReportError("no weight matrix named '" + name + "'; available: " + available);
    }
    SparsityReport r = weight_sparsity(p->value, threshold, quantile, power);
    r.matrix = name;
    return r;
}

void write_sparsity_csv(const SparsityReport& r, std::ostream& os) {
    os << "matrix,threshold,quantile,power,near_zero_fraction,mass_concentration\n";
    os << r.matrix << ',' << fmt(r.threshold) << ',' << fmt(r.quantile) << ','
       << (r.power == PowerMeasure::L1 ? "l1" : "l2") << ',' << fmt(r.near_zero_fraction) << ','
       << fmt(r.mass_concentration) << '\n';
}

Tensor cosine_similarity_matrix(const std::vector<std::span<const double>>& vectors) {
    const std::size_t b = vectors.size();
    Tensor out({b, b});
    std::vector<double> norms(b);
    for (std::size_t i = 0; i < b; ++i) {
        if (vectors[i].size() != vectors[0].size()) throw DimensionError("cosine similarity needs equal-length vectors");
        norms[i] = std::sqrt(std::inner_product(vectors[i].begin(), vectors[i].end(), vectors[i].begin(), 0.0));
    }
    for (std::size_t i = 0; i < b; ++i) {
        out.at(i, i) = 1.0;
        for (std::size_t j = i + 1; j < b; ++j) {
            double c = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0)
                c = std::inner_product(vectors[i].begin(), vectors[i].end(), vectors[j].begin(), 0.0) /
                    (norms[i] * norms[j]);
            out.at(i, j) = out.at(j, i) = c;
        }
    }
    return out;
}

Tensor report_view_similarity(const Model& model, std::size_t layer) {
    if (layer >= model.layers().size())
        throw IndexError("layer " + std::to_string(layer) + " out of range (model has " +
                         std::to_string(model.layers().size()) + " SSR layers)");
    const SSRLayer& l = model.layers()[layer];
    if (!l.config().has_projection())
        throw ContractError("layer " + std::to_string(layer) + " uses a " + to_string(l.config().filter) +
                            " filter and has no projection matrices");
    std::vector<std::span<const double>> flat;
    for (const auto& v : l.views()) flat.push_back(v.projection->value.values());
    return cosine_similarity_matrix(flat);
}

void write_matrix_csv(const Tensor& m, std::ostream& os) {
    const std::size_t n = m.rows(), c = m.cols();
    os << "row";
    for (std::size_t j = 0; j < c; ++j) os << ",v" << j;
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        os << i;
        for (std::size_t j = 0; j < c; ++j) os << ',' << fmt(m.at(i, j));
        os << '\n';
    }
}

namespace {

std::vector<LayerCapture> capture(const Model& model, const EncodedData& probe, Tape& tape) {
    tape.no_grad = true;
    std::vector<LayerCapture> caps;
    LayerCapture want;
    want.want_traces = false;
    LayerForwardContext ctx;
    ctx.capture = &want;
    model.forward(tape, probe.ids, probe.size(), ctx, &caps);
    return caps;
}

double mean_abs(const Tensor& t) {
    double s = 0.0;
    for (double v : t.values()) s += std::abs(v);
    return t.numel() ? s / static_cast<double>(t.numel()) : 0.0;
}

}  // namespace

std::vector<double> filter_sparsity(const Model& model, const EncodedData& probe) {
    if (probe.size() == 0) throw DataError("probe batch is empty");
    Tape tape;
    const auto caps = capture(model, probe, tape);
    std::vector<double> out;
    for (const auto& c : caps) {
        double s = 0.0;
        for (const Var& h : c.filtered) s += ics_sparsity(h.value());
        out.push_back(c.filtered.empty() ? 0.0 : s / static_cast<double>(c.filtered.size()));
    }
    return out;
}

double mean_filter_sparsity(const Model& model, const EncodedData& probe) {
    const auto per_layer = filter_sparsity(model, probe);
    if (per_layer.empty()) return 0.0;
    return std::accumulate(per_layer.begin(), per_layer.end(), 0.0) / static_cast<double>(per_layer.size());
}

EncodedData make_probe(const EncodedData& data, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    auto rows = rng.sample_without_replacement(data.size(), std::min(n, data.size()));
    std::sort(rows.begin(), rows.end());
    return data.select(rows);
}

std::vector<IcsTraceRow> sample_ics_state(const Model& model, const EncodedData& probe, std::uint64_t step) {
    Tape tape;
    const auto caps = capture(model, probe, tape);
    std::vector<IcsTraceRow> rows;
    for (std::size_t l = 0; l < caps.size(); ++l) {
        if (model.layers()[l].config().filter != FilterKind::Dynamic) continue;
        for (std::size_t v = 0; v < caps[l].filtered.size(); ++v) {
            const Tensor& h = caps[l].filtered[v].value();
            rows.push_back({step, l, v, ics_sparsity(h), mean_abs(h)});
        }
    }
    return rows;
}

std::vector<IcsTraceRow> trace_ics_dynamics(Model& model, const EncodedData& train_rows, const EncodedData& val_rows,
                                            const TrainConfig& config, std::uint64_t steps, std::uint64_t every,
                                            std::size_t probe_size, std::uint64_t probe_seed) {
    if (!has_dynamic(model)) throw ContractError("ICS tracing needs a model with dynamic layers");
    if (every < 1) throw ContractError("trace sampling interval must be positive");
    const EncodedData probe = make_probe(train_rows, probe_size, probe_seed);
    std::vector<IcsTraceRow> rows;
    auto sample = [&](std::uint64_t step) {
        if (step % every != 0 || step > steps) return;
        auto r = sample_ics_state(model, probe, step);
        rows.insert(rows.end(), r.begin(), r.end());
    };
    if (steps == 0) {
        sample(0);
        return rows;
    }
    TrainConfig cfg = config;
    cfg.max_epochs = std::numeric_limits<std::size_t>::max();
    cfg.patience = std::numeric_limits<std::size_t>::max();
    TrainHooks hooks;
    hooks.max_steps = steps;
    hooks.on_step = sample;
    train(model, train_rows, val_rows, cfg, hooks);
    return rows;
}

void write_trace_csv(const std::vector<IcsTraceRow>& rows, std::ostream& os) {
    os << "step,layer,view,sparsity,mean_abs\n";
    for (const auto& r : rows)
        os << r.step << ',' << r.layer << ',' << r.view << ',' << fmt(r.sparsity) << ',' << fmt(r.mean_abs) << '\n';
}

}  // namespace ssr
