#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "ssr/error.hpp"
#include "ssr/gradcheck.hpp"
#include "ssr/ics.hpp"
#include "support.hpp"

using namespace ssr;
using ssr::test::random_tensor;

namespace {

Tensor run_ics(const Tensor& z, const std::vector<double>& alphas, const Tensor* gamma = nullptr,
               IcsTrace* trace = nullptr) {
    Tape tape;
    Var a = tape.constant(Tensor::vector(alphas));
    Var g;
    if (gamma) g = tape.constant(*gamma);
    return ics(tape.constant(z), a, gamma ? &g : nullptr, trace).value();
}

}  // namespace

TEST_CASE("all-negative rows become exact zeros") {
    Rng rng(1);
    Tensor z = random_tensor({3, 6}, rng, -5, -0.01);
    Tensor g = random_tensor({6}, rng, 0.5, 2);
    for (std::size_t T : {0u, 1u, 5u}) {
        const Tensor y = run_ics(z, std::vector<double>(T, 0.3), &g);
        for (double v : y.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("uniform input decays by (1 - alpha) per step") {
    const Tensor z({1, 8}, 1.0);
    const Tensor y = run_ics(z, std::vector<double>(5, 0.1));
    for (double v : y.values()) CHECK(v == doctest::Approx(0.59049).epsilon(1e-15));
}

TEST_CASE("hand-simulated four-dimensional example") {
    const Tensor z = Tensor::matrix({{1.0, 0.2, 0.05, -0.3}});
    IcsTrace trace;
    const Tensor y = run_ics(z, {0.5, 0.5}, nullptr, &trace);
    CHECK(y[0] == doctest::Approx(0.7328125).epsilon(1e-15));
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.0);
    CHECK(ics_sparsity(y) == 0.75);
    REQUIRE(trace.size() == 3);
    CHECK(trace.mu[0] == doctest::Approx(0.3125).epsilon(1e-15));
    CHECK(trace.mu[1] == doctest::Approx(0.221875).epsilon(1e-15));
    CHECK(trace.sparsity[0] == 0.25);
    CHECK(trace.sparsity[1] == 0.5);
    CHECK(trace.sparsity[2] == 0.75);
}

TEST_CASE("kernel matches the direct simulation") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + rng.below(40);
        std::vector<double> alphas(rng.below(7));
        for (double& a : alphas) a = rng.uniform(0.01, 1.0);
        const Tensor z = random_tensor({1, d}, rng, -1, 1);
        const Tensor y = run_ics(z, alphas);
        const auto states = test::simulate_ics(z.storage(), alphas);
        REQUIRE(y.storage() == states.back());
    }
}

TEST_CASE("sparsity fraction") {
    CHECK(ics_sparsity(Tensor::vector({0, 0, 0, 1})) == 0.75);
    CHECK(ics_sparsity(Tensor::vector({1, -2, 3})) == 0.0);
}

TEST_CASE("L1 norm never increases along the dynamics") {
    Rng rng(3);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> alphas(5);
        for (double& a : alphas) a = rng.uniform(1e-3, 2.0);
        const auto states = test::simulate_ics(random_tensor({64}, rng, -1, 1).storage(), alphas);
        for (std::size_t t = 0; t + 1 < states.size(); ++t) {
            const double l1a = std::accumulate(states[t].begin(), states[t].end(), 0.0);
            const double l1b = std::accumulate(states[t + 1].begin(), states[t + 1].end(), 0.0);
            if (l1b > l1a) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("zeros stay zero and sparsity is non-decreasing in t") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        IcsTrace trace;
        const Tensor z = random_tensor({4, 16}, rng, -1, 1);
        run_ics(z, {0.3, 0.6, 0.1, 0.9}, nullptr, &trace);
        REQUIRE(trace.size() == 5);
        for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace.sparsity[t] >= trace.sparsity[t - 1]);
        const auto states = test::simulate_ics(z.storage(), {0.3, 0.6, 0.1, 0.9});
        (void)states;
    }
    // Coordinate-level: once zero, zero forever.
    for (int trial = 0; trial < 200; ++trial) {
        const auto states = test::simulate_ics(random_tensor({20}, rng).storage(), {0.5, 0.5, 0.5});
        for (std::size_t t = 1; t < states.size(); ++t)
            for (std::size_t j = 0; j < 20; ++j)
                if (states[t - 1][j] == 0.0) CHECK(states[t][j] == 0.0);
    }
}

TEST_CASE("permutation equivariance with uniform gamma") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 12;
        const Tensor z = random_tensor({1, d}, rng);
        std::vector<std::size_t> perm(d);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Tensor pz({1, d});
        for (std::size_t j = 0; j < d; ++j) pz[j] = z[perm[j]];
        const Tensor gamma({d}, 1.7);
        const Tensor y = run_ics(z, {0.2, 0.4, 0.3}, &gamma), py = run_ics(pz, {0.2, 0.4, 0.3}, &gamma);
        for (std::size_t j = 0; j < d; ++j) CHECK(py[j] == doctest::Approx(y[perm[j]]).epsilon(1e-14));
    }
}

TEST_CASE("positive homogeneity of the pre-recovery map") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor z = random_tensor({2, 10}, rng);
        const double s = rng.uniform(0.1, 10.0);
        Tensor sz = z;
        for (auto& v : sz.values()) v *= s;
        const Tensor y = run_ics(z, {0.1, 0.5, 0.2}), ys = run_ics(sz, {0.1, 0.5, 0.2});
        for (std::size_t i = 0; i < y.numel(); ++i) CHECK(ys[i] == doctest::Approx(s * y[i]).epsilon(1e-12));
    }
}

TEST_CASE("gradients with respect to input, rates and recovery scale") {
    Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ParameterStore store;
        IcsParams p = make_ics_params(store, "v", 3, 8, 0.1 + 0.2 * rng.uniform(), true);
        for (auto& g : p.gamma->value.values()) g = rng.uniform(0.5, 1.5);
        Parameter& z = store.add("z", random_tensor({3, 8}, rng));
        Tensor w = random_tensor({3, 8}, rng);
        auto res = finite_diff_check(
            [&](Tape& t) { return sum(mul_const(ics_forward(t.param(z), p), w)); }, store);
        worst = std::max(worst, res.max_rel_error);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradient at a random non-kink point through the input") {
    Rng rng(8);
    const Tensor alphas = Tensor::vector({0.2, 0.1, 0.4});
    auto res = finite_diff_check(
        [&](Tape& t, Var z) {
            Var a = t.constant(alphas);
            return sum(mul(ics(z, a, nullptr), ics(z, a, nullptr)));
        },
        random_tensor({2, 10}, rng));
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("softplus reparameterisation keeps rates positive") {
    for (double a : {1e-4, 0.01, 0.1, 0.5, 3.0, 40.0}) CHECK(raw_to_alpha(alpha_to_raw(a)) == doctest::Approx(a).epsilon(1e-12));
    for (double r : {-50.0, -5.0, 0.0, 5.0}) CHECK(raw_to_alpha(r) > 0.0);
    ParameterStore store;
    IcsParams p = make_ics_params(store, "x", 5, 16);
    CHECK(p.alpha_raw->value.numel() == 5);
    CHECK(p.gamma->value.numel() == 16);
    for (double r : p.alpha_raw->value.values()) CHECK(raw_to_alpha(r) == doctest::Approx(0.1).epsilon(1e-12));
    for (double g : p.gamma->value.values()) CHECK(g == 1.0);
    CHECK(store.find("x.ics_alpha_raw"));
    CHECK(store.find("x.ics_gamma"));
}

TEST_CASE("width mismatch raises a dimension error") {
    ParameterStore store;
    IcsParams p = make_ics_params(store, "x", 2, 6);
    Tape tape;
    CHECK_THROWS_AS(ics_forward(tape.constant(Tensor({2, 5})), p), DimensionError);
}

TEST_CASE("trace export") {
    IcsTrace trace;
    run_ics(Tensor::matrix({{1.0, 0.2, 0.05, -0.3}}), {0.5, 0.5}, nullptr, &trace);
    std::ostringstream os;
    trace.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "step,sparsity,mean_abs,mu");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("straight-through top-k") {
    Tape tape;
    CHECK(ste_topk(tape.constant(Tensor::matrix({{3, 1, 2}})), 2).value() == Tensor::matrix({{3, 0, 2}}));
    CHECK(ste_topk(tape.constant(Tensor::matrix({{-3, 1, 2}})), 1).value() == Tensor::matrix({{-3, 0, 0}}));
    Rng rng(9);
    const Tensor z = random_tensor({3, 7}, rng);
    CHECK(ste_topk(tape.constant(z), 7).value() == z);
    Var v = tape.variable(z);
    tape.backward(sum(ste_topk(v, 2)));
    for (double g : v.grad().values()) CHECK(g == 1.0);
    CHECK_THROWS_AS(ste_topk(tape.constant(z), 0), ContractError);
    CHECK_THROWS_AS(ste_topk(tape.constant(z), 8), ContractError);
}

TEST_CASE("operation counts scale linearly") {
    const auto base = ics_complexity_probe(64, 5, 10);
    const auto dd = ics_complexity_probe(128, 5, 10);
    const auto dt = ics_complexity_probe(64, 10, 10);
    CHECK(static_cast<double>(dd.total()) / base.total() == doctest::Approx(2.0).epsilon(0.05));
    CHECK(static_cast<double>(dt.iterative_ops) / base.iterative_ops == doctest::Approx(2.0).epsilon(0.05));
    const auto t0 = ics_complexity_probe(64, 0, 10);
    CHECK(t0.iterative_ops == 0);
    CHECK(t0.total() == t0.init_ops + t0.recovery_ops);
}

TEST_CASE("sparsity rises with the extinction rate and the iteration count") {
    Rng rng(10);
    const Tensor z = random_tensor({256, 32}, rng, -1, 1);
    double prev = -1.0;
    for (double a : {0.01, 0.1, 0.3, 0.5}) {
        const double s = ics_sparsity(run_ics(z, std::vector<double>(5, a)));
        CHECK(s >= prev);
        prev = s;
    }
    prev = -1.0;
    for (std::size_t T : {1u, 2u, 5u}) {
        const double s = ics_sparsity(run_ics(z, std::vector<double>(T, 0.1)));
        CHECK(s >= prev);
        prev = s;
    }
}
