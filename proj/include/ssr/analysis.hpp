#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ssr/config.hpp"
#include "ssr/encoder.hpp"
#include "ssr/model.hpp"

namespace ssr {

/// How a dimension's share of a weight matrix is measured.
enum class PowerMeasure { SquaredL2, L1 };

struct SparsityReport {
    std::string matrix;
    double threshold = 1e-3;
    double quantile = 0.8;
    PowerMeasure power = PowerMeasure::SquaredL2;
    /// Fraction of entries with |w| < threshold.
    double near_zero_fraction = 0.0;
    /// Smallest fraction of input dimensions whose power reaches `quantile`
    /// of the total, taking dimensions in decreasing order of power.
    double mass_concentration = 0.0;
};

/// `w` is [d_in x d_out] (inputs on rows, as multiplied from the left);
/// a rank-1 tensor is read as a column. Dimensions are the rows.
SparsityReport weight_sparsity(const Tensor& w, double threshold = 1e-3, double quantile = 0.8,
                               PowerMeasure power = PowerMeasure::SquaredL2);

/// Same statistic on a named model matrix; an empty name picks the first
/// fusion matrix (or the first dense layer of an MLP). Unknown names raise
/// ReportError listing the available matrices.
SparsityReport report_weight_sparsity(const Model& model, const std::string& matrix = {}, double threshold = 1e-3,
                                      double quantile = 0.8, PowerMeasure power = PowerMeasure::SquaredL2);

void write_sparsity_csv(const SparsityReport& r, std::ostream& os);

/// Pairwise cosine similarity of flattened vectors; zero vectors have
/// similarity 0 with everything but themselves.
Tensor cosine_similarity_matrix(const std::vector<std::span<const double>>& vectors);

/// b x b cosine similarity between the projection matrices of a layer's
/// views. Layers without projections raise ContractError.
Tensor report_view_similarity(const Model& model, std::size_t layer);

void write_matrix_csv(const Tensor& m, std::ostream& os);

/// Mean fraction of exact zeros in the filter outputs of every view of every
/// layer on `probe`, per layer.
std::vector<double> filter_sparsity(const Model& model, const EncodedData& probe);
double mean_filter_sparsity(const Model& model, const EncodedData& probe);

/// `n` rows drawn without replacement from `data` by a seeded generator.
EncodedData make_probe(const EncodedData& data, std::size_t n, std::uint64_t seed);

struct IcsTraceRow {
    std::uint64_t step = 0;
    std::size_t layer = 0;
    std::size_t view = 0;
    double sparsity = 0.0;
    double mean_abs = 0.0;
};

/// Trains for `steps` updates, sampling the ICS output of every dynamic
/// view on a fixed probe batch at step 0 and every `every` steps after.
std::vector<IcsTraceRow> trace_ics_dynamics(Model& model, const EncodedData& train_rows, const EncodedData& val_rows,
                                            const TrainConfig& config, std::uint64_t steps, std::uint64_t every,
                                            std::size_t probe_size = 1024, std::uint64_t probe_seed = 99);

/// ICS outputs of every dynamic view of the current model on `probe`.
std::vector<IcsTraceRow> sample_ics_state(const Model& model, const EncodedData& probe, std::uint64_t step);

void write_trace_csv(const std::vector<IcsTraceRow>& rows, std::ostream& os);

}  // namespace ssr
