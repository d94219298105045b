#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "json.hpp"
#include "ssr/data.hpp"

namespace ssr {

/// Model-ready rows: one embedding id per field (categoricals first, then
/// discretised numerics), labels as doubles per task.
struct EncodedData {
    std::size_t n_fields = 0;
    std::vector<std::uint32_t> ids;         // row-major n x n_fields
    std::vector<std::vector<double>> labels;  // [task][row]
    std::vector<std::uint64_t> user_ids;

    std::size_t size() const { return user_ids.size(); }
    EncodedData select(const std::vector<std::size_t>& rows) const;
};

/// Vocabulary building and numeric discretisation, fitted on training rows
/// only. Categorical values seen at most `min_count` times map to id 0; the
/// rest get ids 1.. in increasing raw-value order. Numerics go through log1p
/// (negative values clamp to 0) and equal-width buckets over the fitted range.
class FeatureEncoder {
public:
    static constexpr std::size_t kDefaultBuckets = 32;
    static constexpr std::size_t kDefaultMinCount = 5;

    FeatureEncoder() = default;
    /// Fits on the rows tagged Train, or on every row when `data` is unsplit.
    static FeatureEncoder fit(const Dataset& data, std::size_t buckets = kDefaultBuckets,
                              std::size_t min_count = kDefaultMinCount);

    EncodedData transform(const Dataset& data) const;
    std::uint32_t encode_categorical(std::size_t field, std::uint64_t raw) const;
    std::uint32_t bucket(std::size_t field, double raw) const;

    /// Embedding vocabulary per field, in id order.
    std::vector<std::size_t> vocab_sizes() const;
    std::size_t n_fields() const { return vocab_.size() + ranges_.size(); }
    const DatasetSchema& schema() const { return schema_; }

    friend void to_json(nlohmann::json& j, const FeatureEncoder& e);
    friend void from_json(const nlohmann::json& j, FeatureEncoder& e);
    bool operator==(const FeatureEncoder&) const = default;

private:
    DatasetSchema schema_;
    std::size_t buckets_ = kDefaultBuckets;
    std::size_t min_count_ = kDefaultMinCount;
    std::vector<std::map<std::uint64_t, std::uint32_t>> vocab_;
    std::vector<std::pair<double, double>> ranges_;  // log1p min/max per numeric field
};

}  // namespace ssr
