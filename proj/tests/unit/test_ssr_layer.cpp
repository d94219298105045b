#include <cmath>

#include "doctest.h"
#include "ssr/complexity.hpp"
#include "ssr/error.hpp"
#include "ssr/gradcheck.hpp"
#include "ssr/ssr_layer.hpp"
#include "support.hpp"

using namespace ssr;
using ssr::test::random_tensor;

namespace {

SSRLayerConfig layer_cfg(FilterKind kind, std::size_t b, std::size_t dv, bool final_layer) {
    SSRLayerConfig c;
    c.filter = kind;
    c.views = b;
    c.view_dim = dv;
    c.is_final = final_layer;
    return c;
}

// Randomises every parameter so no view starts at a symmetric point.
void perturb(ParameterStore& store, Rng& rng) {
    for (std::size_t i = 0; i < store.size(); ++i)
        for (auto& v : store[i].value.values()) v += rng.uniform(-0.3, 0.3);
}

// Layer-norm of each row without affine terms.
Tensor plain_layer_norm(const Tensor& x, double eps) {
    Tensor y = x;
    const std::size_t d = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double mean = 0.0, var = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x.at(r, j);
        mean /= d;
        for (std::size_t j = 0; j < d; ++j) var += (x.at(r, j) - mean) * (x.at(r, j) - mean);
        var /= d;
        for (std::size_t j = 0; j < d; ++j) y.at(r, j) = (x.at(r, j) - mean) / std::sqrt(var + eps);
    }
    return y;
}

}  // namespace

TEST_CASE("identity static view reduces to relu then layer norm") {
    SSRLayerConfig c = layer_cfg(FilterKind::Static, 1, 5, true);
    c.activation = Activation::Relu;
    c.layer_norm_affine = false;
    ParameterStore store;
    SSRLayer layer(c, 5, store, "l", 1, ViewSelection{{{0, 1, 2, 3, 4}}, 5, 0});
    Tensor eye({5, 5});
    for (std::size_t i = 0; i < 5; ++i) eye.at(i, i) = 1.0;
    store.at("l.view0.V").value = eye;
    Rng rng(1);
    const Tensor x = random_tensor({4, 5}, rng, -2, 2);
    Tensor r = x;
    for (auto& v : r.values()) v = std::max(v, 0.0);
    Tape tape;
    const Tensor y = layer.forward(tape.constant(x)).value();
    CHECK(test::max_abs_diff(y, plain_layer_norm(r, 1e-5)) < 1e-12);
}

TEST_CASE("averaging identical views equals one view") {
    SSRLayerConfig c = layer_cfg(FilterKind::Static, 2, 3, true);
    ParameterStore store;
    SSRLayer layer(c, 6, store, "l", 1, ViewSelection{{{4, 0, 2}, {4, 0, 2}}, 6, 0});
    Rng rng(2);
    perturb(store, rng);
    for (const char* suffix : {".V", ".bias", ".ln_scale", ".ln_shift"})
        store.at(std::string("l.view1") + suffix).value = store.at(std::string("l.view0") + suffix).value;
    LayerCapture cap;
    Tape tape;
    const Tensor x = random_tensor({3, 6}, rng);
    LayerForwardContext ctx;
    ctx.capture = &cap;
    Var y = layer.forward(tape.constant(x), ctx);
    // Recompute view 0 alone.
    Var z = cap.activated[0];
    Var ln = layer_norm(z, tape.param(store.at("l.view0.ln_scale")), tape.param(store.at("l.view0.ln_shift")));
    CHECK(test::max_abs_diff(y.value(), ln.value()) < 1e-15);
}

TEST_CASE("per-view fusion equals the block-diagonal product") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t b = 1 + rng.below(4), dv = 1 + rng.below(6), d_in = dv + rng.below(10);
        const bool dynamic = rng.bernoulli(0.5);
        SSRLayerConfig c = layer_cfg(dynamic ? FilterKind::Dynamic : FilterKind::Static, b, dv, false);
        ParameterStore store;
        SSRLayer layer(c, d_in, store, "l", rng.next_u64());
        perturb(store, rng);
        LayerCapture cap;
        LayerForwardContext ctx;
        ctx.capture = &cap;
        Tape tape;
        layer.forward(tape.constant(random_tensor({5, d_in}, rng)), ctx);

        const std::size_t hw = c.filtered_width(d_in);
        Tensor h({5, b * hw});
        Tensor blockdiag({b * hw, b * dv});
        Tensor bias({b * dv});
        for (std::size_t v = 0; v < b; ++v) {
            const Tensor& hv = cap.filtered[v].value();
            for (std::size_t r = 0; r < 5; ++r)
                for (std::size_t j = 0; j < hw; ++j) h.at(r, v * hw + j) = hv.at(r, j);
            const Tensor& V = layer.views()[v].fusion->value;
            for (std::size_t i = 0; i < hw; ++i)
                for (std::size_t j = 0; j < dv; ++j) blockdiag.at(v * hw + i, v * dv + j) = V.at(i, j);
            for (std::size_t j = 0; j < dv; ++j) bias[v * dv + j] = layer.views()[v].bias->value[j];
        }
        Tensor big = test::naive_matmul(h, blockdiag);
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t j = 0; j < b * dv; ++j) big.at(r, j) += bias[j];
        for (std::size_t v = 0; v < b; ++v) {
            const Tensor& fused = cap.fused[v].value();
            for (std::size_t r = 0; r < 5; ++r)
                for (std::size_t j = 0; j < dv; ++j) REQUIRE(std::abs(fused.at(r, j) - big.at(r, v * dv + j)) < 1e-12);
        }
    }
}

TEST_CASE("width contract") {
    ParameterStore store;
    SSRLayer mid(layer_cfg(FilterKind::Dynamic, 3, 4, false), 10, store, "a", 1);
    SSRLayer last(layer_cfg(FilterKind::Dynamic, 3, 4, true), 12, store, "b", 2);
    Tape tape;
    Var h = mid.forward(tape.constant(Tensor({2, 10}, 0.5)));
    CHECK(h.shape() == Shape{2, 12});
    Var out = last.forward(h);
    CHECK(out.shape() == Shape{2, 4});
    CHECK_THROWS_AS(mid.forward(tape.constant(Tensor({2, 9}))), DimensionError);
}

TEST_CASE("parameter registry matches the closed-form count") {
    for (FilterKind kind : {FilterKind::Static, FilterKind::Dynamic, FilterKind::TopKSte, FilterKind::Dropout,
                            FilterKind::DenseProjection}) {
        for (bool affine : {true, false}) {
            SSRLayerConfig c = layer_cfg(kind, 3, 5, false);
            c.layer_norm_affine = affine;
            ParameterStore store;
            SSRLayer layer(c, 20, store, "l", 4);
            CHECK(store.total_numel() == layer_param_count(c, 20).total());
        }
    }
    SSRLayerConfig c = layer_cfg(FilterKind::Dynamic, 3, 5, false);
    const auto p = layer_param_count(c, 20);
    CHECK(p.projection == 3 * 20 * 10);
    CHECK(p.ics == 3 * (5 + 10));
}

TEST_CASE("views share no parameters") {
    Rng rng(5);
    SSRLayerConfig c = layer_cfg(FilterKind::Dynamic, 3, 4, false);
    ParameterStore store;
    SSRLayer layer(c, 9, store, "l", 6);
    const Tensor x = random_tensor({4, 9}, rng);
    auto run = [&] {
        LayerCapture cap;
        LayerForwardContext ctx;
        ctx.capture = &cap;
        Tape tape;
        layer.forward(tape.constant(x), ctx);
        std::vector<Tensor> z;
        for (auto& v : cap.activated) z.push_back(v.value());
        return z;
    };
    const auto before = run();
    for (auto* p : {layer.views()[1].projection, layer.views()[1].fusion, layer.views()[1].bias,
                    layer.views()[1].ics.gamma, layer.views()[1].ics.alpha_raw})
        for (auto& v : p->value.values()) v += 0.25;
    const auto after = run();
    CHECK(before[0] == after[0]);
    CHECK(before[2] == after[2]);
    CHECK_FALSE(before[1] == after[1]);
}

TEST_CASE("two-layer dynamic stack passes the finite difference check") {
    Rng rng(7);
    ParameterStore store;
    SSRLayerConfig c1 = layer_cfg(FilterKind::Dynamic, 2, 3, false);
    c1.view_dim_star = 6;
    SSRLayerConfig c2 = c1;
    c2.is_final = true;
    SSRLayer l1(c1, 5, store, "l1", 1), l2(c2, 6, store, "l2", 2);
    perturb(store, rng);
    const Tensor x = random_tensor({3, 5}, rng);
    const Tensor w = random_tensor({3, 3}, rng);
    auto res = finite_diff_check([&](Tape& t) { return sum(mul_const(l2.forward(l1.forward(t.constant(x))), w)); },
                                 store);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("dropout filter masks only in training") {
    SSRLayerConfig c = layer_cfg(FilterKind::Dropout, 2, 4, true);
    ParameterStore store;
    SSRLayer layer(c, 8, store, "l", 3);
    CHECK(c.effective_dropout(8) == doctest::Approx(0.5));
    Rng rng(8);
    const Tensor x = random_tensor({5, 8}, rng);
    Tape t1, t2;
    CHECK(layer.forward(t1.constant(x)).value() == layer.forward(t2.constant(x)).value());
    LayerForwardContext train;
    train.training = true;
    Tape t3;
    CHECK_THROWS_AS(layer.forward(t3.constant(x), train), ContractError);
    Rng mask_rng(1);
    train.rng = &mask_rng;
    LayerCapture cap;
    train.capture = &cap;
    layer.forward(t3.constant(x), train);
    std::size_t zeros = 0;
    for (double v : cap.filtered[0].value().values()) {
        if (v == 0.0) ++zeros;
        else CHECK(std::abs(v) > 0.0);
    }
    CHECK(zeros > 0);
}

TEST_CASE("layer configuration errors") {
    ParameterStore store;
    CHECK_THROWS_AS(SSRLayer(layer_cfg(FilterKind::Static, 2, 9, false), 8, store, "a", 1), ConfigError);
    SSRLayerConfig bad = layer_cfg(FilterKind::Dynamic, 2, 8, false);
    bad.view_dim_star = 4;
    CHECK_THROWS_AS(SSRLayer(bad, 8, store, "b", 1), ConfigError);
}

TEST_CASE("prediction head") {
    ParameterStore store;
    Rng rng(9);
    PredictionHead h = PredictionHead::create(store, "click", 4, rng);
    Tape tape;
    const Tensor z = random_tensor({6, 4}, rng);
    const Tensor p = h.predict(tape.constant(z)).value();
    CHECK(p.shape() == Shape{6});
    for (std::size_t r = 0; r < 6; ++r) {
        double s = h.bias->value[0];
        for (std::size_t j = 0; j < 4; ++j) s += z.at(r, j) * h.weight->value[j];
        CHECK(p[r] == doctest::Approx(1.0 / (1.0 + std::exp(-s))).epsilon(1e-14));
        CHECK(p[r] > 0.0);
        CHECK(p[r] < 1.0);
    }
    h.weight->value.fill(0.0);
    Tape t2;
    for (double v : h.predict(t2.constant(z)).value().values()) CHECK(v == 0.5);
    h.weight->value[1] = 2.0;
    Tensor z2 = z;
    Tape t3;
    const double before = h.predict(t3.constant(z2)).value()[0];
    z2.at(0, 1) += 1.0;
    const double after = h.predict(t3.constant(z2)).value()[0];
    CHECK(after > before);
}

TEST_CASE("static selections are deterministic and resampled per seed") {
    ParameterStore s1, s2, s3;
    SSRLayer a(layer_cfg(FilterKind::Static, 4, 5, false), 20, s1, "l", 42);
    SSRLayer b(layer_cfg(FilterKind::Static, 4, 5, false), 20, s2, "l", 42);
    SSRLayer c(layer_cfg(FilterKind::Static, 4, 5, false), 20, s3, "l", 43);
    CHECK(*a.selection() == *b.selection());
    CHECK_FALSE(*a.selection() == *c.selection());
}
