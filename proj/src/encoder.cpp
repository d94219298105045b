#include "ssr/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ssr/error.hpp"

namespace ssr {

EncodedData EncodedData::select(const std::vector<std::size_t>& rows) const {
    EncodedData out;
    out.n_fields = n_fields;
    out.labels.resize(labels.size());
    out.ids.reserve(rows.size() * n_fields);
    for (std::size_t r : rows) {
        out.ids.insert(out.ids.end(), ids.begin() + r * n_fields, ids.begin() + (r + 1) * n_fields);
        for (std::size_t t = 0; t < labels.size(); ++t) out.labels[t].push_back(labels[t][r]);
        out.user_ids.push_back(user_ids[r]);
    }
    return out;
}

namespace {

double log_feature(double raw) { return std::log1p(std::max(raw, 0.0)); }

}  // namespace

FeatureEncoder FeatureEncoder::fit(const Dataset& data, std::size_t buckets, std::size_t min_count) {
    data.validate();
    if (buckets < 1) throw ConfigError("bucket count must be positive");
    std::vector<std::size_t> rows;
    if (data.split.empty()) {
        rows.resize(data.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
        rows = data.rows_of(Split::Train);
    }
    if (rows.empty()) throw DataError("cannot fit the feature encoder on an empty training split");

    FeatureEncoder e;
    e.schema_ = data.schema;
    e.buckets_ = buckets;
    e.min_count_ = min_count;
    const std::size_t nc = data.schema.n_categorical, nn = data.schema.n_numeric;
    e.vocab_.resize(nc);
    for (std::size_t f = 0; f < nc; ++f) {
        std::unordered_map<std::uint64_t, std::size_t> counts;
        for (std::size_t r : rows) ++counts[data.categorical[r * nc + f]];
        std::vector<std::uint64_t> kept;
        for (const auto& [v, c] : counts)
            if (c > min_count) kept.push_back(v);
        std::sort(kept.begin(), kept.end());
        for (std::size_t i = 0; i < kept.size(); ++i) e.vocab_[f][kept[i]] = static_cast<std::uint32_t>(i + 1);
    }
    e.ranges_.resize(nn);
    for (std::size_t f = 0; f < nn; ++f) {
        double lo = log_feature(data.numeric[rows[0] * nn + f]), hi = lo;
        for (std::size_t r : rows) {
            const double v = log_feature(data.numeric[r * nn + f]);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        e.ranges_[f] = {lo, hi};
    }
    return e;
}

std::uint32_t FeatureEncoder::encode_categorical(std::size_t field, std::uint64_t raw) const {
    const auto& v = vocab_.at(field);
    auto it = v.find(raw);
    return it == v.end() ? 0 : it->second;
}

std::uint32_t FeatureEncoder::bucket(std::size_t field, double raw) const {
    const auto [lo, hi] = ranges_.at(field);
    const double v = log_feature(raw);
    if (!(hi > lo) || v <= lo) return 0;
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(buckets_);
    return static_cast<std::uint32_t>(std::min<double>(std::floor(pos), static_cast<double>(buckets_ - 1)));
}

EncodedData FeatureEncoder::transform(const Dataset& data) const {
    data.validate();
    if (!(data.schema == schema_)) throw SchemaError("dataset columns do not match the fitted encoder");
    const std::size_t nc = schema_.n_categorical, nn = schema_.n_numeric, nf = n_fields();
    EncodedData out;
    out.n_fields = nf;
    out.ids.resize(data.size() * nf);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t f = 0; f < nc; ++f) out.ids[r * nf + f] = encode_categorical(f, data.categorical[r * nc + f]);
        for (std::size_t f = 0; f < nn; ++f) out.ids[r * nf + nc + f] = bucket(f, data.numeric[r * nn + f]);
    }
    out.labels.resize(data.labels.size());
    for (std::size_t t = 0; t < data.labels.size(); ++t)
        out.labels[t].assign(data.labels[t].begin(), data.labels[t].end());
    out.user_ids = data.user_ids;
    return out;
}

std::vector<std::size_t> FeatureEncoder::vocab_sizes() const {
    std::vector<std::size_t> v;
    for (const auto& m : vocab_) v.push_back(m.size() + 1);
    for (std::size_t f = 0; f < ranges_.size(); ++f) v.push_back(buckets_);
    return v;
}

void to_json(nlohmann::json& j, const FeatureEncoder& e) {
    nlohmann::json vocab = nlohmann::json::array();
    for (const auto& m : e.vocab_) {
        // Kept raw values in id order; id = position + 1.
        std::vector<std::uint64_t> raw(m.size());
        for (const auto& [v, id] : m) raw[id - 1] = v;
        vocab.push_back(raw);
    }
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& [lo, hi] : e.ranges_) ranges.push_back({lo, hi});
    j = nlohmann::json{{"labels", e.schema_.label_names},
                       {"n_categorical", e.schema_.n_categorical},
                       {"n_numeric", e.schema_.n_numeric},
                       {"buckets", e.buckets_},
                       {"min_count", e.min_count_},
                       {"vocab", vocab},
                       {"ranges", ranges}};
}

void from_json(const nlohmann::json& j, FeatureEncoder& e) {
    try {
        e.schema_.label_names = j.at("labels").get<std::vector<std::string>>();
        e.schema_.n_categorical = j.at("n_categorical").get<std::size_t>();
        e.schema_.n_numeric = j.at("n_numeric").get<std::size_t>();
        e.buckets_ = j.at("buckets").get<std::size_t>();
        e.min_count_ = j.at("min_count").get<std::size_t>();
        e.vocab_.clear();
        for (const auto& field : j.at("vocab")) {
            std::map<std::uint64_t, std::uint32_t> m;
            std::uint32_t id = 1;
            for (const auto& v : field) m[v.get<std::uint64_t>()] = id++;
            e.vocab_.push_back(std::move(m));
        }
        e.ranges_.clear();
        for (const auto& r : j.at("ranges")) e.ranges_.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed encoder record: ") + ex.what());
    }
    if (e.vocab_.size() != e.schema_.n_categorical || e.ranges_.size() != e.schema_.n_numeric)
        throw DataError("encoder record does not match its schema");
}

}  // namespace ssr
