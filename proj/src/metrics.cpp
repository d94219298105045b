#include "ssr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ssr/error.hpp"

namespace ssr {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(std::string(what) + ": scores and labels differ in length");
    if (a == 0) throw MetricError(std::string(what) + ": empty input");
}

// Mann-Whitney statistic with mid-ranks for ties. Returns nan for one class.
double auc_unchecked(std::span<const double> scores, std::span<const double> labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Work in doubled ranks so tie groups stay integral: 2*midrank = first + last + 2.
    double pos_rank2 = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double rank2 = static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] > 0.5) {
                pos_rank2 += rank2;
                ++n_pos;
            }
        i = j + 1;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nan("");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    // U = sum(ranks of positives) - np(np+1)/2, all doubled.
    const double u2 = pos_rank2 - np * (np + 1.0);
    return u2 / (2.0 * np * nn);
}

}  // namespace

double evaluate_auc(std::span<const double> scores, std::span<const double> labels) {
    check_sizes(scores.size(), labels.size(), "auc");
    const double a = auc_unchecked(scores, labels);
    if (std::isnan(a)) throw MetricError("auc is undefined when only one class is present");
    return a;
}

double evaluate_gauc(std::span<const double> scores, std::span<const double> labels,
                     std::span<const std::uint64_t> users) {
    check_sizes(scores.size(), labels.size(), "gauc");
    if (users.size() != scores.size()) throw DimensionError("gauc: user ids and scores differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return users[a] < users[b]; });
    double weighted = 0.0, weight = 0.0;
    std::vector<double> s, l;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        s.clear();
        l.clear();
        while (j < order.size() && users[order[j]] == users[order[i]]) {
            s.push_back(scores[order[j]]);
            l.push_back(labels[order[j]]);
            ++j;
        }
        const double a = auc_unchecked(s, l);
        if (!std::isnan(a)) {
            weighted += static_cast<double>(s.size()) * a;
            weight += static_cast<double>(s.size());
        }
        i = j;
    }
    if (weight == 0.0) throw MetricError("gauc is undefined: no user has both classes");
    return weighted / weight;
}

double evaluate_logloss(std::span<const double> probabilities, std::span<const double> labels) {
    check_sizes(probabilities.size(), labels.size(), "logloss");
    constexpr double kClamp = 1e-12;
    double total = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = std::clamp(probabilities[i], kClamp, 1.0 - kClamp);
        total -= labels[i] > 0.5 ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(probabilities.size());
}

}  // namespace ssr
