#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Row-parallel numeric kernels. Every kernel exists twice:
//   ssr::kernels::omp        OpenMP, parallel over independent rows
//   ssr::kernels::reference  plain serial loops, kept as the test oracle
// Cross-row reductions (parameter gradients) are always done serially in
// ascending row order, so both versions agree bit-for-bit for any thread count.
//
// Shapes are row-major; `n` is always the number of rows (batch).

namespace ssr::kernels {

/// Per-call scratch owned by the caller of an ICS forward pass.
/// states holds x^(0..T) as (T+1) blocks of n*d, mu holds mu^(0..T-1) as T blocks of n.
struct IcsBuffers {
    double* states;
    double* mu;
};

/// Operation tallies for the ICS complexity probe.
struct IcsOpCounter {
    std::uint64_t init_ops = 0;       // rectification of z
    std::uint64_t iterative_ops = 0;  // mean, subtract, rectify over T steps
    std::uint64_t recovery_ops = 0;   // gamma scaling
    std::uint64_t total() const { return init_ops + iterative_ops + recovery_ops; }
};

#define SSR_KERNEL_DECLS                                                                        \
    /* c[m x n] = a[m x k] * b[k x n] */                                                        \
    void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,      \
                std::size_t n);                                                                 \
    /* da[m x k] += dc[m x n] * b[k x n]^T */                                                   \
    void matmul_abt_acc(const double* dc, const double* b, double* da, std::size_t m,           \
                        std::size_t k, std::size_t n);                                          \
    /* db[k x n] += a[m x k]^T * dc[m x n] */                                                   \
    void matmul_atb_acc(const double* a, const double* dc, double* db, std::size_t m,           \
                        std::size_t k, std::size_t n);                                          \
    /* Iterative competitive sparsification over rows of z[n x d]; gamma may be null. */        \
    void ics_forward(const double* z, std::size_t n, std::size_t d,                             \
                     std::span<const double> alphas, const double* gamma, double* y,            \
                     IcsBuffers buf);                                                           \
    /* Gradients; dz is overwritten, dalpha[T] and dgamma[d] are accumulated. */                \
    void ics_backward(const double* dy, std::size_t n, std::size_t d,                           \
                      std::span<const double> alphas, const double* gamma, IcsBuffers buf,      \
                      double* dz, double* dalpha, double* dgamma);                              \
    /* Per-row standardisation; xhat[n x d] and inv_std[n] are saved for backward. */           \
    void layer_norm_forward(const double* x, std::size_t n, std::size_t d, const double* scale, \
                            const double* shift, double eps, double* y, double* xhat,           \
                            double* inv_std);                                                   \
    /* dx is accumulated; dscale/dshift may be null when the norm has no affine part. */        \
    void layer_norm_backward(const double* dy, std::size_t n, std::size_t d,                    \
                             const double* scale, const double* xhat, const double* inv_std,    \
                             double* dx, double* dscale, double* dshift);

namespace omp {
SSR_KERNEL_DECLS
}
namespace reference {
SSR_KERNEL_DECLS
/// Same arithmetic as ics_forward, with every elementary operation tallied.
void ics_forward_counted(const double* z, std::size_t n, std::size_t d, std::span<const double> alphas,
                         const double* gamma, double* y, IcsOpCounter& counter);
}

#undef SSR_KERNEL_DECLS

/// Selects which implementation the autodiff layer dispatches to.
enum class Backend { OpenMP, Reference };
void set_backend(Backend b);
Backend backend();

}  // namespace ssr::kernels
