#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace ssr {

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

/// Column layout of a CSV file: `<labels...>,user_id,c0..c{m-1},n0..n{k-1}`.
struct DatasetSchema {
    std::vector<std::string> label_names{"label"};
    std::size_t n_categorical = 0;
    std::size_t n_numeric = 0;

    std::vector<std::string> header() const;
    bool operator==(const DatasetSchema&) const = default;
};

/// Raw rows before vocabulary building and discretisation.
struct Dataset {
    DatasetSchema schema;
    std::vector<std::vector<std::uint8_t>> labels;  // [task][row]
    std::vector<std::uint64_t> user_ids;
    std::vector<std::uint64_t> categorical;  // row-major n x n_categorical
    std::vector<double> numeric;             // row-major n x n_numeric
    std::vector<Split> split;                // empty until split() is applied

    std::size_t size() const { return user_ids.size(); }
    /// Rows carrying the given split tag, in their stored order.
    std::vector<std::size_t> rows_of(Split s) const;
    Dataset select(const std::vector<std::size_t>& rows) const;
    Dataset subset(Split s) const { return select(rows_of(s)); }
    /// Throws DataError when column counts or labels are inconsistent.
    void validate() const;
};

struct SyntheticSpec {
    std::size_t n_samples = 100000;
    std::vector<std::size_t> vocab_sizes = std::vector<std::size_t>(10, 200);
    std::size_t n_numeric = 2;
    /// Latent coordinates per categorical field (numeric fields carry one).
    std::size_t latent_dim = 4;
    /// Number of informative latent coordinates.
    std::size_t relevant = 12;
    /// Pairwise product terms among the informative coordinates.
    std::size_t pairwise_terms = 12;
    double label_noise = 0.0;
    double positive_rate = 0.2;
    /// Multiplier on the standardised latent score before the sigmoid.
    double signal_scale = 3.0;
    std::size_t n_users = 1000;
    double user_exponent = 1.2;
    std::uint64_t seed = 7;

    std::size_t latent_width() const { return vocab_sizes.size() * latent_dim + n_numeric; }
    void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

/// Generated rows plus the ground truth they were drawn from.
struct SyntheticData {
    Dataset data;
    std::vector<double> oracle_score;        // standardised latent score per row
    std::vector<std::size_t> relevant;       // informative latent coordinates
    std::vector<std::size_t> relevant_fields;
    double bias = 0.0;                       // calibrated sigmoid offset
    /// Latent coordinates per row (n x latent_width), for oracle fits.
    std::vector<double> latent;
};

/// Label = Bernoulli(sigmoid(scale * s + bias)) with s a standardised sum of
/// linear and pairwise terms over the informative coordinates, then flipped
/// with probability `label_noise`. Deterministic in `spec.seed`.
SyntheticData generate(const SyntheticSpec& spec);

/// Tags rows train/val/test by a seeded shuffle and contiguous assignment.
void split(Dataset& data, const std::vector<double>& fractions, std::uint64_t seed);

void write_csv(const Dataset& data, std::ostream& os);
void write_csv(const Dataset& data, const std::filesystem::path& path);
/// Parses a CSV whose header must match `schema`; errors carry line numbers.
Dataset read_csv(std::istream& is, const DatasetSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema);
/// Infers the schema from a header row.
DatasetSchema schema_from_header(const std::string& header_line);

}  // namespace ssr
