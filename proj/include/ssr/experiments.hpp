#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssr/config.hpp"
#include "ssr/data.hpp"
#include "ssr/encoder.hpp"
#include "ssr/model.hpp"

namespace ssr {

/// Everything one configuration file describes.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SyntheticSpec data;
    std::vector<double> split_fractions{0.8, 0.1, 0.1};
    std::uint64_t split_seed = 1;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Sections `model`, `train`, `data`, `split`; all optional, unknown keys rejected.
void from_json(const nlohmann::json& j, RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

/// Encoder fitted on the training split plus the encoded splits.
struct PreparedData {
    FeatureEncoder encoder;
    EncodedData train;
    EncodedData val;
    EncodedData test;
    FeatureSchema schema() const { return {encoder.vocab_sizes()}; }
};

/// `data` must be split already.
PreparedData prepare(const Dataset& data);

enum class SweepAxis { Views, Width, Depth, Iterations, Alpha, Gamma };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

/// `base` with the axis set to `value` (gamma: 0 off, otherwise on).
ModelConfig apply_axis(const ModelConfig& base, SweepAxis axis, double value);

struct SweepPoint {
    double value = 0.0;
    bool ok = false;
    std::string error;
    std::size_t params = 0;
    std::uint64_t flops = 0;
    double val_auc = 0.0;
    double val_logloss = 0.0;
    double sparsity = 0.0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::Views;
    std::vector<SweepPoint> points;
};

/// Trains one model per grid value with identical seeds and budgets. The grid
/// must be non-empty and strictly increasing. A failing point is recorded
/// with its error and the sweep moves on.
SweepResult run_sweep(SweepAxis axis, const std::vector<double>& grid, const ModelConfig& base,
                      const TrainConfig& train_config, const PreparedData& data, std::size_t probe_size = 2048);

void write_sweep_csv(const SweepResult& r, std::ostream& os);

struct AblationRow {
    std::string variant;
    ModelConfig config;
    std::size_t params = 0;
    double budget_ratio = 1.0;
    std::vector<double> aucs;  // validation AUC per seed
    double mean_auc = 0.0;
    double delta_auc = 0.0;    // mean_auc minus the full model's
};

/// Closest-budget variant of `cfg`: searches view_dim (and, failing the
/// tolerance, the view count) for the parameter count nearest `target`.
ModelConfig match_budget(ModelConfig cfg, std::size_t d_in, std::size_t target, bool fix_views,
                         double tolerance = 0.1);

/// The ablation variants, budget-matched to `base` (a dynamic model):
/// full, w/o sparse filtering, single view, static, STE top-k, dropout.
std::vector<AblationRow> ablation_variants(const ModelConfig& base, std::size_t d_in, double tolerance = 0.1);

std::vector<AblationRow> run_ablation_suite(const ModelConfig& base, const TrainConfig& train_config,
                                            const PreparedData& data, const std::vector<std::uint64_t>& seeds,
                                            double tolerance = 0.1);

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& os);

}  // namespace ssr
