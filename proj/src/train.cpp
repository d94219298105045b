#include "ssr/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "ssr/error.hpp"
#include "ssr/metrics.hpp"
#include "ssr/optim.hpp"

namespace ssr {

void to_json(nlohmann::json& j, const EpochRecord& r) {
    j = nlohmann::json{{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"val_auc", r.val_auc},
                       {"val_logloss", r.val_logloss}};
    if (r.seconds) j["seconds"] = *r.seconds;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{{"auc", r.auc}, {"logloss", r.logloss}, {"best_epoch", r.best_epoch}, {"steps", r.steps}};
    j["gauc"] = r.gauc ? nlohmann::json(*r.gauc) : nlohmann::json(nullptr);
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : r.tasks) {
        nlohmann::json tj{{"task", t.task}, {"auc", t.auc}, {"logloss", t.logloss}};
        tj["gauc"] = t.gauc ? nlohmann::json(*t.gauc) : nlohmann::json(nullptr);
        tasks.push_back(tj);
    }
    j["tasks"] = tasks;
    j["history"] = r.history;
}

namespace {

std::vector<std::uint32_t> gather_ids(const EncodedData& data, const std::vector<std::size_t>& order,
                                      std::size_t begin, std::size_t end) {
    const std::size_t nf = data.n_fields;
    std::vector<std::uint32_t> ids((end - begin) * nf);
    for (std::size_t i = begin; i < end; ++i)
        std::copy_n(data.ids.begin() + order[i] * nf, nf, ids.begin() + (i - begin) * nf);
    return ids;
}

void check_data(const Model& model, const EncodedData& data, const char* what) {
    if (data.size() == 0) throw DataError(std::string(what) + " split is empty");
    if (data.n_fields != model.schema().n_fields())
        throw SchemaError(std::string(what) + " rows have " + std::to_string(data.n_fields) + " fields, model expects " +
                          std::to_string(model.schema().n_fields()));
    if (data.labels.size() != model.heads().size())
        throw SchemaError(std::string(what) + " rows carry " + std::to_string(data.labels.size()) +
                          " label columns for " + std::to_string(model.heads().size()) + " heads");
}

double sigmoid(double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

}  // namespace

std::vector<std::vector<double>> predict(const Model& model, const EncodedData& data, std::size_t batch_size) {
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<double>> out(model.heads().size(), std::vector<double>(n));
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        Tape tape;
        tape.no_grad = true;
        const auto ids = gather_ids(data, order, begin, end);
        const auto logits = model.forward(tape, ids, end - begin);
        for (std::size_t t = 0; t < logits.size(); ++t) {
            const Tensor& v = logits[t].value();
            for (std::size_t i = 0; i < end - begin; ++i) out[t][begin + i] = sigmoid(v[i]);
        }
    }
    return out;
}

MetricsReport evaluate(const Model& model, const EncodedData& data, std::size_t batch_size) {
    check_data(model, data, "evaluation");
    const auto probs = predict(model, data, batch_size);
    MetricsReport r;
    for (std::size_t t = 0; t < probs.size(); ++t) {
        TaskMetrics m;
        m.task = model.heads()[t].task;
        m.auc = evaluate_auc(probs[t], data.labels[t]);
        m.logloss = evaluate_logloss(probs[t], data.labels[t]);
        try {
            m.gauc = evaluate_gauc(probs[t], data.labels[t], data.user_ids);
        } catch (const MetricError&) {
            m.gauc.reset();
        }
        r.tasks.push_back(m);
    }
    r.auc = r.tasks[0].auc;
    r.gauc = r.tasks[0].gauc;
    r.logloss = r.tasks[0].logloss;
    return r;
}

MetricsReport train(Model& model, const EncodedData& train_rows, const EncodedData& val_rows,
                    const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    check_data(model, train_rows, "training");
    check_data(model, val_rows, "validation");

    ParameterStore& params = model.params();
    AdamState adam;
    Rng dropout_rng(mix_seed(config.seed, 0xd7));
    const std::size_t n = train_rows.size();
    std::vector<std::size_t> order(n);
    std::vector<Tensor> best;
    double best_auc = -1.0;
    std::size_t since_best = 0;
    std::uint64_t step = 0;
    MetricsReport history;
    if (hooks.on_step) hooks.on_step(0);

    auto mean_auc = [](const MetricsReport& r) {
        double s = 0.0;
        for (const auto& t : r.tasks) s += t.auc;
        return s / static_cast<double>(r.tasks.size());
    };

    bool out_of_steps = false;
    for (std::size_t epoch = 1; epoch <= config.max_epochs && !out_of_steps; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(mix_seed(config.seed, epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size), rows = end - begin;
            Tape tape;
            tape.training = true;
            LayerForwardContext ctx;
            ctx.training = true;
            ctx.rng = &dropout_rng;
            const auto ids = gather_ids(train_rows, order, begin, end);
            const auto logits = model.forward(tape, ids, rows, ctx);
            Var loss;
            for (std::size_t t = 0; t < logits.size(); ++t) {
                Tensor labels({rows});
                for (std::size_t i = 0; i < rows; ++i) labels[i] = train_rows.labels[t][order[begin + i]];
                Var l = sigmoid_bce(logits[t], labels);
                loss = t == 0 ? l : add(loss, l);
            }
            const double lv = loss.value().item();
            if (!std::isfinite(lv)) throw ContractError("training loss became non-finite at step " + std::to_string(step));
            params.zero_grad();
            tape.backward(loss);
            adam_step(params, adam, config);
            ++step;
            loss_sum += lv * static_cast<double>(rows);
            seen += rows;
            if (hooks.on_step) hooks.on_step(step);
            if (hooks.max_steps && step >= hooks.max_steps) {
                out_of_steps = true;
                break;
            }
        }

        const MetricsReport val = evaluate(model, val_rows, config.eval_batch_size);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(seen);
        rec.val_auc = val.auc;
        rec.val_logloss = val.logloss;
        if (config.record_timing)
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        history.history.push_back(rec);
        if (hooks.metrics) *hooks.metrics << nlohmann::json(rec).dump() << '\n';

        const double score = mean_auc(val);
        if (score > best_auc) {
            best_auc = score;
            history.best_epoch = epoch;
            since_best = 0;
            best.clear();
            for (std::size_t i = 0; i < params.size(); ++i) best.push_back(params[i].value);
        } else if (++since_best >= config.patience) {
            break;
        }
    }

    for (std::size_t i = 0; i < best.size(); ++i) params[i].value = best[i];
    MetricsReport out = evaluate(model, val_rows, config.eval_batch_size);
    out.history = std::move(history.history);
    out.best_epoch = history.best_epoch;
    out.steps = step;
    return out;
}

}  // namespace ssr
