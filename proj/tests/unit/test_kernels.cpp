#include <omp.h>

#include <vector>

#include "doctest.h"
#include "ssr/kernels.hpp"
#include "support.hpp"

using namespace ssr;
namespace k = ssr::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Large enough that the OpenMP versions take their parallel branch.
struct Sizes {
    std::size_t m, kk, n;
};
constexpr Sizes kShapes[] = {{3, 5, 7}, {257, 64, 33}, {1024, 48, 32}};

class ThreadScope {
public:
    explicit ThreadScope(int n) : saved_(omp_get_max_threads()) { omp_set_num_threads(n); }
    ~ThreadScope() { omp_set_num_threads(saved_); }

private:
    int saved_;
};

}  // namespace

TEST_CASE("matmul kernels agree bit-for-bit across implementations") {
    ThreadScope threads(4);
    Rng rng(1);
    for (auto s : kShapes) {
        const auto a = random_vec(s.m * s.kk, rng), b = random_vec(s.kk * s.n, rng), dc = random_vec(s.m * s.n, rng);
        std::vector<double> c1(s.m * s.n), c2(s.m * s.n);
        k::reference::matmul(a.data(), b.data(), c1.data(), s.m, s.kk, s.n);
        k::omp::matmul(a.data(), b.data(), c2.data(), s.m, s.kk, s.n);
        CHECK(c1 == c2);

        std::vector<double> da1(s.m * s.kk, 0.5), da2(s.m * s.kk, 0.5);
        k::reference::matmul_abt_acc(dc.data(), b.data(), da1.data(), s.m, s.kk, s.n);
        k::omp::matmul_abt_acc(dc.data(), b.data(), da2.data(), s.m, s.kk, s.n);
        CHECK(da1 == da2);

        std::vector<double> db1(s.kk * s.n, -0.25), db2(s.kk * s.n, -0.25);
        k::reference::matmul_atb_acc(a.data(), dc.data(), db1.data(), s.m, s.kk, s.n);
        k::omp::matmul_atb_acc(a.data(), dc.data(), db2.data(), s.m, s.kk, s.n);
        CHECK(db1 == db2);
    }
}

TEST_CASE("reference matmul equals the textbook loop") {
    Rng rng(2);
    const Tensor a = test::random_tensor({6, 4}, rng), b = test::random_tensor({4, 5}, rng);
    std::vector<double> c(30);
    k::reference::matmul(a.data(), b.data(), c.data(), 6, 4, 5);
    CHECK(test::max_abs_diff(Tensor({6, 5}, c), test::naive_matmul(a, b)) < 1e-14);
}

TEST_CASE("ICS kernels agree bit-for-bit across implementations") {
    ThreadScope threads(4);
    Rng rng(3);
    for (std::size_t n : {1u, 37u, 800u}) {
        const std::size_t d = 32, T = 5;
        const auto z = random_vec(n * d, rng), gamma = random_vec(d, rng, 0.5, 1.5), dy = random_vec(n * d, rng);
        const std::vector<double> alphas{0.1, 0.2, 0.05, 0.3, 0.15};
        std::vector<double> st1((T + 1) * n * d), st2(st1.size()), mu1(T * n), mu2(T * n), y1(n * d), y2(n * d);
        k::reference::ics_forward(z.data(), n, d, alphas, gamma.data(), y1.data(), {st1.data(), mu1.data()});
        k::omp::ics_forward(z.data(), n, d, alphas, gamma.data(), y2.data(), {st2.data(), mu2.data()});
        CHECK(y1 == y2);
        CHECK(st1 == st2);
        CHECK(mu1 == mu2);

        std::vector<double> dz1(n * d), dz2(n * d), da1(T, 0.0), da2(T, 0.0), dg1(d, 0.0), dg2(d, 0.0);
        k::reference::ics_backward(dy.data(), n, d, alphas, gamma.data(), {st1.data(), mu1.data()}, dz1.data(),
                                   da1.data(), dg1.data());
        k::omp::ics_backward(dy.data(), n, d, alphas, gamma.data(), {st2.data(), mu2.data()}, dz2.data(), da2.data(),
                             dg2.data());
        CHECK(dz1 == dz2);
        CHECK(da1 == da2);
        CHECK(dg1 == dg2);
    }
}

TEST_CASE("layer norm kernels agree bit-for-bit across implementations") {
    ThreadScope threads(4);
    Rng rng(4);
    for (std::size_t n : {2u, 900u}) {
        const std::size_t d = 24;
        const auto x = random_vec(n * d, rng, -3, 3), scale = random_vec(d, rng), shift = random_vec(d, rng),
                   dy = random_vec(n * d, rng);
        std::vector<double> y1(n * d), y2(n * d), xh1(n * d), xh2(n * d), is1(n), is2(n);
        k::reference::layer_norm_forward(x.data(), n, d, scale.data(), shift.data(), 1e-5, y1.data(), xh1.data(),
                                         is1.data());
        k::omp::layer_norm_forward(x.data(), n, d, scale.data(), shift.data(), 1e-5, y2.data(), xh2.data(), is2.data());
        CHECK(y1 == y2);
        std::vector<double> dx1(n * d, 0.0), dx2(n * d, 0.0), ds1(d, 0.0), ds2(d, 0.0), dh1(d, 0.0), dh2(d, 0.0);
        k::reference::layer_norm_backward(dy.data(), n, d, scale.data(), xh1.data(), is1.data(), dx1.data(),
                                          ds1.data(), dh1.data());
        k::omp::layer_norm_backward(dy.data(), n, d, scale.data(), xh2.data(), is2.data(), dx2.data(), ds2.data(),
                                    dh2.data());
        CHECK(dx1 == dx2);
        CHECK(ds1 == ds2);
        CHECK(dh1 == dh2);
    }
}

TEST_CASE("backend switch is observable and restorable") {
    const auto saved = k::backend();
    k::set_backend(k::Backend::Reference);
    CHECK(k::backend() == k::Backend::Reference);
    k::set_backend(k::Backend::OpenMP);
    CHECK(k::backend() == k::Backend::OpenMP);
    k::set_backend(saved);
}
