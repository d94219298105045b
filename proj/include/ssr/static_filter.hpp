#pragma once

#include <cstdint>
#include <vector>

#include "ssr/autodiff.hpp"

namespace ssr {

/// Fixed per-view column subsets: the one-hot selection matrices of the
/// static filter, stored as index lists. Immutable once sampled.
struct ViewSelection {
    std::vector<std::vector<std::size_t>> views;
    std::size_t d_in = 0;
    std::uint64_t seed = 0;

    std::size_t view_count() const { return views.size(); }
    std::size_t view_width() const { return views.empty() ? 0 : views.front().size(); }
    bool operator==(const ViewSelection&) const = default;
};

/// b independent uniform draws of d_v distinct indices from [0, d_in).
/// View i uses the generator stream mix_seed(seed, i).
ViewSelection sample_views(std::size_t d_in, std::size_t d_v, std::size_t b, std::uint64_t seed);

/// Column gather of one view; zero FLOPs.
Var apply_filter(Var x, const ViewSelection& sel, std::size_t view);

/// The explicit d_in x d_v one-hot matrix equivalent to apply_filter.
Tensor selection_to_matrix(const ViewSelection& sel, std::size_t view);

/// Fraction of input columns that no view selects.
double uncovered_fraction(const ViewSelection& sel);

}  // namespace ssr
