#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ssr/autodiff.hpp"
#include "ssr/error.hpp"
#include "ssr/gradcheck.hpp"
#include "ssr/static_filter.hpp"
#include "support.hpp"

using namespace ssr;
using ssr::test::random_tensor;

namespace {

// Scalar reduction with non-uniform weights so that every output coordinate
// contributes a distinct gradient.
Var weighted_sum(Tape& tape, Var y) {
    Tensor w(y.shape());
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
    (void)tape;
    return sum(mul_const(y, w));
}

// Random point whose entries stay at least `margin` away from zero.
Tensor away_from_zero(Shape shape, Rng& rng, double margin = 0.05) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
        const double m = rng.uniform(margin, 1.0);
        v = rng.bernoulli(0.5) ? m : -m;
    }
    return t;
}

}  // namespace

TEST_CASE("tensor shape invariants") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    CHECK(Tensor::scalar(4.0).item() == 4.0);
}

TEST_CASE("matmul forward examples") {
    Tape tape;
    Var a = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    Var b = tape.constant(Tensor::matrix({{3, 4}, {5, 6}}));
    CHECK(matmul(a, b).value() == Tensor::matrix({{3, 4}, {5, 6}}));
    Var c = tape.constant(Tensor::matrix({{1, 2}}));
    Var d = tape.constant(Tensor::matrix({{3}, {4}}));
    CHECK(matmul(c, d).value().item() == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tape tape;
    Var a = tape.constant(Tensor({2, 3}));
    Var b = tape.constant(Tensor({4, 2}));
    try {
        matmul(a, b);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x2]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient matches finite differences") {
    Rng rng(11);
    const Tensor b = random_tensor({4, 3}, rng);
    const Tensor a = random_tensor({5, 4}, rng);
    auto res = finite_diff_check(
        [&](Tape& t, Var x) { return weighted_sum(t, matmul(x, t.constant(b))); }, a);
    CHECK(res.checked == 20);
    CHECK(res.max_rel_error < 1e-6);
    res = finite_diff_check([&](Tape& t, Var x) { return weighted_sum(t, matmul(t.constant(a), x)); }, b);
    CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("relu forward, subgradient and finite differences") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({-1, 0, 2}));
    Var y = relu(x);
    CHECK(y.value() == Tensor::vector({0, 0, 2}));
    tape.backward(sum(y));
    CHECK(x.grad() == Tensor::vector({0, 0, 1}));

    Rng rng(3);
    auto res = finite_diff_check([](Tape& t, Var v) { return weighted_sum(t, relu(v)); }, away_from_zero({40}, rng));
    CHECK(res.excluded == 0);
    CHECK(res.max_rel_error < 1e-6);

    auto at1 = finite_diff_check([](Tape&, Var v) { return sum(relu(v)); }, Tensor::vector({1.0}));
    CHECK(at1.max_rel_error < 1e-9);
}

TEST_CASE("gelu values and gradient") {
    Tape tape;
    CHECK(gelu(tape.constant(Tensor::vector({0.0}))).value()[0] == 0.0);
    CHECK(std::abs(gelu(tape.constant(Tensor::vector({10.0}))).value()[0] - 10.0) < 1e-8);
    // x * Phi(x) at x = 1: Phi(1) = 0.841344746068543
    CHECK(gelu(tape.constant(Tensor::vector({1.0}))).value()[0] == doctest::Approx(0.841344746068543).epsilon(1e-14));
    Rng rng(5);
    auto res = finite_diff_check([](Tape& t, Var v) { return weighted_sum(t, gelu(v)); },
                                 random_tensor({50}, rng, -3, 3));
    CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("sigmoid and softplus gradients") {
    Rng rng(6);
    auto r1 = finite_diff_check([](Tape& t, Var v) { return weighted_sum(t, sigmoid(v)); },
                                random_tensor({30}, rng, -6, 6));
    CHECK(r1.max_rel_error < 1e-6);
    auto r2 = finite_diff_check([](Tape& t, Var v) { return weighted_sum(t, softplus(v)); },
                                random_tensor({30}, rng, -6, 6));
    CHECK(r2.max_rel_error < 1e-6);
    Tape tape;
    CHECK(softplus(tape.constant(Tensor::vector({800.0}))).value()[0] == 800.0);
    CHECK(std::isfinite(softplus(tape.constant(Tensor::vector({-800.0}))).value()[0]));
}

TEST_CASE("layer norm forward properties") {
    Tape tape;
    Var ones = tape.constant(Tensor({3}, 1.0));
    Var zeros = tape.constant(Tensor({3}, 0.0));
    Var c = layer_norm(tape.constant(Tensor::matrix({{2, 2, 2}})), ones, zeros, 1e-5);
    for (double v : c.value().values()) CHECK(v == 0.0);

    Rng rng(8);
    Var x = tape.constant(random_tensor({6, 10}, rng, -5, 5));
    Var y = layer_norm(x, 1e-5);
    for (std::size_t r = 0; r < 6; ++r) {
        double mean = 0.0, var = 0.0, xm = 0.0, xv = 0.0;
        for (std::size_t j = 0; j < 10; ++j) xm += x.value().at(r, j) / 10.0;
        for (std::size_t j = 0; j < 10; ++j) xv += std::pow(x.value().at(r, j) - xm, 2) / 10.0;
        for (std::size_t j = 0; j < 10; ++j) mean += y.value().at(r, j);
        mean /= 10.0;
        for (std::size_t j = 0; j < 10; ++j) var += std::pow(y.value().at(r, j) - mean, 2);
        var /= 10.0;
        CHECK(std::abs(mean) < 1e-10);
        // eps sits inside the square root
        CHECK(var == doctest::Approx(xv / (xv + 1e-5)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(layer_norm(x, 0.0), ContractError);
}

TEST_CASE("layer norm gradients") {
    Rng rng(9);
    const Tensor scale = random_tensor({7}, rng, 0.5, 1.5);
    const Tensor shift = random_tensor({7}, rng);
    auto res = finite_diff_check(
        [&](Tape& t, Var v) { return weighted_sum(t, layer_norm(v, t.constant(scale), t.constant(shift), 1e-5)); },
        random_tensor({4, 7}, rng, -2, 2));
    CHECK(res.max_rel_error < 1e-5);

    ParameterStore store;
    store.add("scale", scale);
    store.add("shift", shift);
    const Tensor x = random_tensor({4, 7}, rng, -2, 2);
    auto pres = finite_diff_check(
        [&](Tape& t) {
            return weighted_sum(t, layer_norm(t.constant(x), t.param(store.at("scale")), t.param(store.at("shift"))));
        },
        store);
    CHECK(pres.max_rel_error < 1e-5);
}

TEST_CASE("mean over the last axis") {
    Tape tape;
    CHECK(mean_last_axis(tape.constant(Tensor::vector({1, 2, 3, 4}))).value()[0] == 2.5);
    CHECK(mean_last_axis(tape.constant(Tensor({5}))).value()[0] == 0.0);
    Var x = tape.variable(Tensor::matrix({{1, 2, 3, 4}}));
    Var m = mean_last_axis(x);
    CHECK(m.shape() == Shape{1, 1});
    tape.backward(sum(m));
    for (double g : x.grad().values()) CHECK(g == 0.25);
    Rng rng(10);
    auto res = finite_diff_check([](Tape& t, Var v) { return weighted_sum(t, mean_last_axis(v)); },
                                 random_tensor({3, 5}, rng));
    CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("concat and slice round trip") {
    Tape tape;
    Var a = tape.constant(Tensor::vector({1, 2}));
    Var b = tape.constant(Tensor::vector({3}));
    std::vector<Var> parts{a, b};
    CHECK(concat_last_axis(parts).value() == Tensor::vector({1, 2, 3}));
    std::vector<Var> one{a};
    CHECK(concat_last_axis(one).value() == a.value());

    Rng rng(12);
    std::vector<Var> blocks;
    std::vector<std::size_t> widths{3, 1, 4};
    for (auto w : widths) blocks.push_back(tape.constant(random_tensor({5, w}, rng)));
    Var cat = concat_last_axis(blocks);
    std::size_t begin = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        CHECK(slice_last_axis(cat, begin, begin + widths[i]).value() == blocks[i].value());
        begin += widths[i];
    }
    std::vector<Var> bad{tape.constant(Tensor({2, 3})), tape.constant(Tensor({3, 3}))};
    CHECK_THROWS_AS(concat_last_axis(bad), DimensionError);

    auto res = finite_diff_check(
        [&](Tape& t, Var v) {
            std::vector<Var> p{v, t.constant(Tensor({5, 2}, 1.0)), v};
            return weighted_sum(t, slice_last_axis(concat_last_axis(p), 1, 7));
        },
        random_tensor({5, 3}, rng));
    CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("gather columns") {
    Tape tape;
    Var x = tape.constant(Tensor::matrix({{10, 20, 30}}));
    std::vector<std::size_t> idx{2, 0};
    CHECK(gather_columns(x, idx).value() == Tensor::matrix({{30, 10}}));
    std::vector<std::size_t> all{0, 1, 2};
    CHECK(gather_columns(x, all).value() == x.value());
    std::vector<std::size_t> bad{1, 3};
    try {
        gather_columns(x, bad);
        FAIL("expected an index error");
    } catch (const IndexError& e) {
        CHECK(std::string(e.what()).find('3') != std::string::npos);
    }

    // Bit-exact against the one-hot matrix product.
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d_in = 1 + rng.below(20), d_v = 1 + rng.below(d_in);
        auto sel = sample_views(d_in, d_v, 1, rng.next_u64());
        Var xi = tape.constant(random_tensor({1 + rng.below(6), d_in}, rng, -10, 10));
        Var g = gather_columns(xi, sel.views[0]);
        Var m = matmul(xi, tape.constant(selection_to_matrix(sel, 0)));
        REQUIRE(g.value() == m.value());
    }

    // Repeated indices scatter-add.
    Tape t2;
    Var v = t2.variable(Tensor::matrix({{1, 2, 3}}));
    std::vector<std::size_t> rep{1, 1, 2};
    t2.backward(sum(gather_columns(v, rep)));
    CHECK(v.grad() == Tensor::matrix({{0, 2, 1}}));
}

TEST_CASE("sigmoid binary cross-entropy") {
    Tape tape;
    Var l0 = sigmoid_bce(tape.constant(Tensor::vector({0.0})), Tensor::vector({1.0}));
    CHECK(l0.value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    Var l1 = sigmoid_bce(tape.constant(Tensor::vector({40.0})), Tensor::vector({1.0}));
    CHECK(l1.value().item() < 1e-15);
    CHECK(std::isfinite(sigmoid_bce(tape.constant(Tensor::vector({-800.0})), Tensor::vector({1.0})).value().item()));
    Rng rng(14);
    Tensor labels({12});
    for (auto& y : labels.values()) y = rng.bernoulli(0.5) ? 1.0 : 0.0;
    auto res = finite_diff_check([&](Tape&, Var v) { return sigmoid_bce(v, labels); }, random_tensor({12}, rng, -4, 4));
    CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("backward contracts") {
    ParameterStore store;
    Parameter& w = store.add("w", Tensor::vector({1, 2, 3}));
    Parameter& unused = store.add("unused", Tensor::vector({4, 5}));
    {
        Tape tape;
        tape.backward(sum(tape.param(w)));
        for (double g : w.grad.values()) CHECK(g == 1.0);
        CHECK(unused.grad.shape() == unused.value.shape());
        for (double g : unused.grad.values()) CHECK(g == 0.0);
    }
    store.zero_grad();
    {
        Tape tape;
        tape.backward(sum(scale(tape.param(w), 0.0)));
        for (double g : w.grad.values()) CHECK(g == 0.0);
    }
    {
        Tape tape;
        Var v = tape.param(w);
        CHECK_THROWS_AS(tape.backward(v), ContractError);
    }
    {
        // Shared subexpressions accumulate.
        Tape tape;
        Var x = tape.variable(Tensor::vector({0.7}));
        tape.backward(sum(add(x, x)));
        CHECK(x.grad()[0] == 2.0);
    }
}

TEST_CASE("parameter gradients accumulate across backward calls until zeroed") {
    ParameterStore store;
    Parameter& w = store.add("w", Tensor::vector({1, 2}));
    for (int i = 0; i < 2; ++i) {
        Tape tape;
        tape.backward(sum(tape.param(w)));
    }
    CHECK(w.grad == Tensor::vector({2, 2}));
    store.zero_grad();
    CHECK(w.grad == Tensor::vector({0, 0}));
    CHECK_THROWS_AS(store.add("w", Tensor({1})), ConfigError);
}

TEST_CASE("finite difference checker") {
    auto sq = finite_diff_check([](Tape&, Var v) { return sum(mul(v, v)); }, Tensor::vector({3.0}));
    CHECK(sq.max_rel_error < 1e-9);
    CHECK_THROWS_AS(finite_diff_check([](Tape&, Var v) { return sum(v); }, Tensor::vector({1.0}), 0.0),
                    ContractError);
    // A point straddling the ReLU kink is excluded, not reported as an error.
    auto kink = finite_diff_check([](Tape&, Var v) { return sum(relu(v)); }, Tensor::vector({1e-7, 0.5}));
    CHECK(kink.excluded == 1);
    CHECK(kink.checked == 1);
    CHECK(kink.max_rel_error < 1e-9);
}

TEST_CASE("primitives pass finite differences on 100 random instances") {
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(4), d = 2 + rng.below(6);
        const Tensor x = random_tensor({n, d}, rng, -2, 2);
        const Tensor other = random_tensor({d, 3}, rng);
        const Tensor sc = random_tensor({d}, rng, 0.5, 1.5), sh = random_tensor({d}, rng);
        std::vector<std::function<Var(Tape&, Var)>> fns{
            [&](Tape& t, Var v) { return weighted_sum(t, matmul(v, t.constant(other))); },
            [&](Tape& t, Var v) { return weighted_sum(t, gelu(v)); },
            [&](Tape& t, Var v) { return weighted_sum(t, sigmoid(v)); },
            [&](Tape& t, Var v) { return weighted_sum(t, softplus(v)); },
            [&](Tape& t, Var v) { return weighted_sum(t, layer_norm(v, t.constant(sc), t.constant(sh))); },
            [&](Tape& t, Var v) { return weighted_sum(t, mean_last_axis(v)); },
            [&](Tape& t, Var v) { return weighted_sum(t, relu(v)); },
            [&](Tape& t, Var v) { return weighted_sum(t, add_bias(v, t.constant(sh))); },
        };
        for (auto& f : fns) worst = std::max(worst, finite_diff_check(f, x).max_rel_error);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("embedding lookup") {
    ParameterStore store;
    Parameter& table = store.add("emb", Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
    Tape tape;
    std::vector<std::uint32_t> ids{2, 0, 2};
    Var e = embedding_lookup(tape.param(table), ids);
    CHECK(e.value() == Tensor::matrix({{5, 6}, {1, 2}, {5, 6}}));
    tape.backward(sum(e));
    CHECK(table.grad == Tensor::matrix({{1, 1}, {0, 0}, {2, 2}}));
    std::vector<std::uint32_t> bad{3};
    CHECK_THROWS_AS(embedding_lookup(tape.param(table), bad), IndexError);
}

TEST_CASE("forward values stay finite on finite inputs") {
    Rng rng(15);
    Tape tape;
    Var x = tape.constant(random_tensor({8, 6}, rng, -50, 50));
    for (Var y : {gelu(x), sigmoid(x), softplus(x), relu(x), layer_norm(x)})
        for (double v : y.value().values()) CHECK(std::isfinite(v));
}
