#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssr/config.hpp"
#include "ssr/encoder.hpp"
#include "ssr/model.hpp"

namespace ssr {

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;
    double val_logloss = 0.0;
    std::optional<double> seconds;
};

void to_json(nlohmann::json& j, const EpochRecord& r);

struct TaskMetrics {
    std::string task;
    double auc = 0.0;
    std::optional<double> gauc;
    double logloss = 0.0;
};

/// Metrics of the primary (first) task at the top level, every task in `tasks`.
struct MetricsReport {
    double auc = 0.0;
    std::optional<double> gauc;
    double logloss = 0.0;
    std::vector<TaskMetrics> tasks;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    std::uint64_t steps = 0;
};

void to_json(nlohmann::json& j, const MetricsReport& r);

struct TrainHooks {
    /// Called with the optimizer step count: once with 0 before training,
    /// then after every update.
    std::function<void(std::uint64_t step)> on_step;
    /// Stops after this many updates when non-zero.
    std::uint64_t max_steps = 0;
    /// Receives one JSON object per epoch, newline-terminated.
    std::ostream* metrics = nullptr;
};

/// Probabilities per task, [task][row]; inference mode, no gradients.
std::vector<std::vector<double>> predict(const Model& model, const EncodedData& data, std::size_t batch_size = 4096);

/// AUC and LogLoss per task; GAUC when some user has both classes.
MetricsReport evaluate(const Model& model, const EncodedData& data, std::size_t batch_size = 4096);

/// Minibatch Adam on the summed per-head mean BCE. Validates once per epoch,
/// stops after `patience` epochs without a better mean validation AUC and
/// restores the best parameters. Returns the validation metrics of the
/// restored model with the epoch history.
MetricsReport train(Model& model, const EncodedData& train_rows, const EncodedData& val_rows,
                    const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace ssr
