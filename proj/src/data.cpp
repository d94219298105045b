#include "ssr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssr/error.hpp"
#include "ssr/rng.hpp"

namespace ssr {

std::vector<std::string> DatasetSchema::header() const {
    std::vector<std::string> h = label_names;
    h.push_back("user_id");
    for (std::size_t i = 0; i < n_categorical; ++i) h.push_back("c" + std::to_string(i));
    for (std::size_t i = 0; i < n_numeric; ++i) h.push_back("n" + std::to_string(i));
    return h;
}

std::vector<std::size_t> Dataset::rows_of(Split s) const {
    if (split.size() != size()) throw DataError("dataset has not been split");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i)
        if (split[i] == s) rows.push_back(i);
    return rows;
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.schema = schema;
    out.labels.resize(labels.size());
    const std::size_t nc = schema.n_categorical, nn = schema.n_numeric;
    for (std::size_t r : rows) {
        for (std::size_t t = 0; t < labels.size(); ++t) out.labels[t].push_back(labels[t][r]);
        out.user_ids.push_back(user_ids[r]);
        out.categorical.insert(out.categorical.end(), categorical.begin() + r * nc, categorical.begin() + (r + 1) * nc);
        out.numeric.insert(out.numeric.end(), numeric.begin() + r * nn, numeric.begin() + (r + 1) * nn);
        if (!split.empty()) out.split.push_back(split[r]);
    }
    return out;
}

void Dataset::validate() const {
    const std::size_t n = size();
    if (labels.size() != schema.label_names.size()) throw DataError("label column count does not match schema");
    for (const auto& l : labels) {
        if (l.size() != n) throw DataError("label column length mismatch");
        for (auto v : l)
            if (v > 1) throw DataError("labels must be 0 or 1");
    }
    if (categorical.size() != n * schema.n_categorical) throw DataError("categorical block has wrong size");
    if (numeric.size() != n * schema.n_numeric) throw DataError("numeric block has wrong size");
    if (!split.empty() && split.size() != n) throw DataError("split tags do not cover every row");
}

// ---- synthetic generation ---------------------------------------------------

void SyntheticSpec::validate() const {
    if (n_samples < 1) throw ConfigError("synthetic spec needs at least one sample");
    if (vocab_sizes.empty() && n_numeric == 0) throw ConfigError("synthetic spec needs at least one field");
    for (auto v : vocab_sizes)
        if (v < 1) throw ConfigError("vocabulary sizes must be positive");
    if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
    if (relevant < 1 || relevant > latent_width())
        throw ConfigError("relevant coordinates must lie in [1, " + std::to_string(latent_width()) + "]");
    if (!(label_noise >= 0.0 && label_noise < 0.5)) throw ConfigError("label noise must lie in [0, 0.5)");
    if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw ConfigError("positive rate must lie in (0, 1)");
    if (!(signal_scale > 0.0)) throw ConfigError("signal scale must be positive");
    if (n_users < 1) throw ConfigError("need at least one user");
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
    j = nlohmann::json{{"n_samples", s.n_samples},       {"vocab_sizes", s.vocab_sizes},
                       {"n_numeric", s.n_numeric},       {"latent_dim", s.latent_dim},
                       {"relevant", s.relevant},         {"pairwise_terms", s.pairwise_terms},
                       {"label_noise", s.label_noise},   {"positive_rate", s.positive_rate},
                       {"signal_scale", s.signal_scale}, {"n_users", s.n_users},
                       {"user_exponent", s.user_exponent}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
    static const char* known[] = {"n_samples",    "vocab_sizes", "n_numeric", "latent_dim",
                                  "relevant",     "pairwise_terms", "label_noise", "positive_rate",
                                  "signal_scale", "n_users",     "user_exponent", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }))
            throw ConfigError("unknown key '" + it.key() + "' in data configuration");
    auto read = [&](const char* key, auto& out) {
        if (auto it = j.find(key); it != j.end()) {
            try {
                it->get_to(out);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
            }
        }
    };
    read("n_samples", s.n_samples);
    read("vocab_sizes", s.vocab_sizes);
    read("n_numeric", s.n_numeric);
    read("latent_dim", s.latent_dim);
    read("relevant", s.relevant);
    read("pairwise_terms", s.pairwise_terms);
    read("label_noise", s.label_noise);
    read("positive_rate", s.positive_rate);
    read("signal_scale", s.signal_scale);
    read("n_users", s.n_users);
    read("user_exponent", s.user_exponent);
    read("seed", s.seed);
}

namespace {

double sigmoid(double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

// Upper end of the uniform log1p range of generated numeric features.
constexpr double kNumericLogMax = 6.907755278982137;  // log1p(999)

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    const double eta = spec.label_noise;
    const double base_rate = (spec.positive_rate - eta) / (1.0 - 2.0 * eta);
    if (!(base_rate > 0.0 && base_rate < 1.0))
        throw ConfigError("positive rate " + std::to_string(spec.positive_rate) +
                          " is unreachable with label noise " + std::to_string(eta));

    Rng rng(spec.seed);
    const std::size_t nc = spec.vocab_sizes.size(), nn = spec.n_numeric, m = spec.latent_dim;
    const std::size_t width = spec.latent_width();

    // Per-value latent vectors for categorical fields.
    std::vector<std::vector<double>> tables(nc);
    for (std::size_t f = 0; f < nc; ++f) {
        tables[f].resize(spec.vocab_sizes[f] * m);
        for (double& v : tables[f]) v = rng.normal();
    }

    SyntheticData out;
    out.relevant = rng.sample_without_replacement(width, spec.relevant);
    std::sort(out.relevant.begin(), out.relevant.end());
    for (std::size_t c : out.relevant) {
        const std::size_t field = c < nc * m ? c / m : nc + (c - nc * m);
        if (out.relevant_fields.empty() || out.relevant_fields.back() != field) out.relevant_fields.push_back(field);
    }
    std::vector<double> linear(spec.relevant);
    for (double& w : linear) w = rng.normal();
    std::vector<std::pair<std::size_t, std::size_t>> all_pairs;
    for (std::size_t a = 0; a < spec.relevant; ++a)
        for (std::size_t b = a + 1; b < spec.relevant; ++b) all_pairs.emplace_back(a, b);
    const std::size_t n_pairs = std::min(spec.pairwise_terms, all_pairs.size());
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t idx : rng.sample_without_replacement(all_pairs.size(), n_pairs)) pairs.push_back(all_pairs[idx]);
    std::vector<double> pair_w(n_pairs);
    for (double& w : pair_w) w = rng.normal();

    // Power-law user activity: P(user u) proportional to (u+1)^-exponent.
    std::vector<double> user_cdf(spec.n_users);
    double acc = 0.0;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        acc += std::pow(static_cast<double>(u + 1), -spec.user_exponent);
        user_cdf[u] = acc;
    }
    for (double& c : user_cdf) c /= acc;

    const std::size_t n = spec.n_samples;
    Dataset& d = out.data;
    d.schema.label_names = {"label"};
    d.schema.n_categorical = nc;
    d.schema.n_numeric = nn;
    d.labels.assign(1, std::vector<std::uint8_t>(n));
    d.user_ids.resize(n);
    d.categorical.resize(n * nc);
    d.numeric.resize(n * nn);
    out.latent.resize(n * width);
    std::vector<double> raw_score(n);
    const double num_mean = kNumericLogMax / 2.0, num_std = kNumericLogMax / std::sqrt(12.0);

    for (std::size_t r = 0; r < n; ++r) {
        const double u = rng.uniform();
        d.user_ids[r] = static_cast<std::uint64_t>(
            std::min<std::size_t>(std::lower_bound(user_cdf.begin(), user_cdf.end(), u) - user_cdf.begin(), spec.n_users - 1));
        double* lat = out.latent.data() + r * width;
        for (std::size_t f = 0; f < nc; ++f) {
            const std::size_t v = rng.below(spec.vocab_sizes[f]);
            d.categorical[r * nc + f] = v;
            std::copy_n(tables[f].data() + v * m, m, lat + f * m);
        }
        for (std::size_t f = 0; f < nn; ++f) {
            const double s = rng.uniform(0.0, kNumericLogMax);
            d.numeric[r * nn + f] = std::expm1(s);
            lat[nc * m + f] = (s - num_mean) / num_std;
        }
        double score = 0.0;
        for (std::size_t a = 0; a < spec.relevant; ++a) score += linear[a] * lat[out.relevant[a]];
        for (std::size_t p = 0; p < n_pairs; ++p)
            score += pair_w[p] * lat[out.relevant[pairs[p].first]] * lat[out.relevant[pairs[p].second]];
        raw_score[r] = score;
    }

    double mean = 0.0;
    for (double s : raw_score) mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double s : raw_score) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    out.oracle_score.resize(n);
    for (std::size_t r = 0; r < n; ++r) out.oracle_score[r] = sd > 0 ? (raw_score[r] - mean) / sd : 0.0;

    // Calibrate the offset so the expected clean positive rate hits base_rate.
    auto expected_rate = [&](double bias) {
        double s = 0.0;
        for (double z : out.oracle_score) s += sigmoid(spec.signal_scale * z + bias);
        return s / static_cast<double>(n);
    };
    double lo = -50.0, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (expected_rate(mid) < base_rate ? lo : hi) = mid;
    }
    out.bias = 0.5 * (lo + hi);

    for (std::size_t r = 0; r < n; ++r) {
        bool y = rng.bernoulli(sigmoid(spec.signal_scale * out.oracle_score[r] + out.bias));
        if (eta > 0.0 && rng.bernoulli(eta)) y = !y;
        d.labels[0][r] = y ? 1 : 0;
    }
    return out;
}

void split(Dataset& data, const std::vector<double>& fractions, std::uint64_t seed) {
    if (fractions.size() != 3) throw ContractError("split needs train/val/test fractions");
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw ContractError("split fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ContractError("split fractions must sum to 1");
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
    data.split.assign(n, Split::Test);
    for (std::size_t i = 0; i < n; ++i) {
        const Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
        data.split[order[i]] = s;
    }
}

// ---- CSV -----------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

}  // namespace

void write_csv(const Dataset& data, std::ostream& os) {
    data.validate();
    const auto header = data.schema.header();
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    const std::size_t nc = data.schema.n_categorical, nn = data.schema.n_numeric;
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t t = 0; t < data.labels.size(); ++t) os << (t ? "," : "") << int(data.labels[t][r]);
        os << ',' << data.user_ids[r];
        for (std::size_t c = 0; c < nc; ++c) os << ',' << data.categorical[r * nc + c];
        for (std::size_t c = 0; c < nn; ++c) os << ',' << format_double(data.numeric[r * nn + c]);
        os << '\n';
    }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path.string() + " for writing");
    write_csv(data, os);
}

DatasetSchema schema_from_header(const std::string& header_line) {
    DatasetSchema s;
    s.label_names.clear();
    const auto fields = split_fields(trim_cr(header_line));
    std::size_t i = 0;
    while (i < fields.size() && fields[i] != "user_id") s.label_names.emplace_back(fields[i++]);
    if (i == fields.size()) throw SchemaError("header has no user_id column");
    if (s.label_names.empty()) throw SchemaError("header has no label column");
    ++i;
    while (i < fields.size() && !fields[i].empty() && fields[i][0] == 'c') {
        ++s.n_categorical;
        ++i;
    }
    while (i < fields.size() && !fields[i].empty() && fields[i][0] == 'n') {
        ++s.n_numeric;
        ++i;
    }
    if (i != fields.size()) throw SchemaError("unknown column '" + std::string(fields[i]) + "'");
    if (s.header() != std::vector<std::string>(fields.begin(), fields.end()))
        throw SchemaError("header columns are not in the expected order");
    return s;
}

Dataset read_csv(std::istream& is, const DatasetSchema& schema) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty CSV: missing header row");
    const auto expected = schema.header();
    const auto got = split_fields(trim_cr(line));
    for (std::size_t i = 0; i < got.size(); ++i)
        if (i >= expected.size() || got[i] != expected[i])
            throw SchemaError("unknown column '" + std::string(got[i]) + "' at position " + std::to_string(i + 1));
    if (got.size() != expected.size())
        throw SchemaError("header is missing column '" + expected[got.size()] + "'");

    Dataset d;
    d.schema = schema;
    d.labels.resize(schema.label_names.size());
    const std::size_t nl = schema.label_names.size();
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        const auto row = trim_cr(line);
        if (row.empty()) continue;
        const auto fields = split_fields(row);
        auto fail = [&](const std::string& why) {
            throw DataError("line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != expected.size())
            fail("expected " + std::to_string(expected.size()) + " fields, got " + std::to_string(fields.size()));
        auto parse_uint = [&](std::string_view f, const std::string& col) {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size() || f.empty()) fail("bad integer '" + std::string(f) + "' in column " + col);
            return v;
        };
        for (std::size_t t = 0; t < nl; ++t) {
            const auto v = parse_uint(fields[t], expected[t]);
            if (v > 1) fail("label must be 0 or 1");
            d.labels[t].push_back(static_cast<std::uint8_t>(v));
        }
        d.user_ids.push_back(parse_uint(fields[nl], "user_id"));
        for (std::size_t c = 0; c < schema.n_categorical; ++c)
            d.categorical.push_back(parse_uint(fields[nl + 1 + c], expected[nl + 1 + c]));
        for (std::size_t c = 0; c < schema.n_numeric; ++c) {
            const auto f = fields[nl + 1 + schema.n_categorical + c];
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size() || f.empty() || !std::isfinite(v))
                fail("bad number '" + std::string(f) + "'");
            d.numeric.push_back(v);
        }
    }
    return d;
}

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path.string());
    return read_csv(is, schema);
}

}  // namespace ssr
