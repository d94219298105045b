#include "ssr/static_filter.hpp"

#include "ssr/error.hpp"
#include "ssr/rng.hpp"

namespace ssr {

ViewSelection sample_views(std::size_t d_in, std::size_t d_v, std::size_t b, std::uint64_t seed) {
    if (d_v < 1 || d_v > d_in)
        throw ContractError("sample_views: need 1 <= d_v <= d_in, got d_v=" + std::to_string(d_v) +
                            " d_in=" + std::to_string(d_in));
    if (b < 1) throw ContractError("sample_views: need at least one view");
    ViewSelection sel;
    sel.d_in = d_in;
    sel.seed = seed;
    sel.views.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        Rng rng(mix_seed(seed, i));
        sel.views.push_back(rng.sample_without_replacement(d_in, d_v));
    }
    return sel;
}

namespace {
void check_view(const ViewSelection& sel, std::size_t view) {
    if (view >= sel.views.size())
        throw ContractError("view " + std::to_string(view) + " out of range for " +
                            std::to_string(sel.views.size()) + " views");
}
}  // namespace

Var apply_filter(Var x, const ViewSelection& sel, std::size_t view) {
    check_view(sel, view);
    if (x.value().cols() != sel.d_in)
        throw DimensionError("apply_filter: input width " + std::to_string(x.value().cols()) +
                             " does not match selection source width " + std::to_string(sel.d_in));
    return gather_columns(x, sel.views[view]);
}

Tensor selection_to_matrix(const ViewSelection& sel, std::size_t view) {
    check_view(sel, view);
    const auto& idx = sel.views[view];
    Tensor m({sel.d_in, idx.size()});
    for (std::size_t j = 0; j < idx.size(); ++j) m.at(idx[j], j) = 1.0;
    return m;
}

double uncovered_fraction(const ViewSelection& sel) {
    if (sel.d_in == 0) return 0.0;
    std::vector<bool> seen(sel.d_in, false);
    for (const auto& v : sel.views)
        for (auto i : v) seen[i] = true;
    std::size_t missing = 0;
    for (bool s : seen) missing += !s;
    return static_cast<double>(missing) / static_cast<double>(sel.d_in);
}

}  // namespace ssr
