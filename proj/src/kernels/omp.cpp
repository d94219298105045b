#include <cmath>
#include <vector>

#include "ssr/kernels.hpp"

namespace ssr::kernels::omp {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_abt_acc(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
                    std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
    for (std::size_t i = 0; i < m; ++i) {
        const double* dci = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += dci[j] * bp[j];
            da[i * k + p] += s;
        }
    }
}

void matmul_atb_acc(const double* a, const double* dc, double* db, std::size_t m, std::size_t k,
                    std::size_t n) {
#pragma omp parallel if (m * k * n > kParallelWork)
    {
        std::vector<double> acc(n);
#pragma omp for schedule(static)
        for (std::size_t p = 0; p < k; ++p) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double aip = a[i * k + p];
                const double* dci = dc + i * n;
                for (std::size_t j = 0; j < n; ++j) acc[j] += aip * dci[j];
            }
            double* dbp = db + p * n;
            for (std::size_t j = 0; j < n; ++j) dbp[j] += acc[j];
        }
    }
}

void ics_forward(const double* z, std::size_t n, std::size_t d, std::span<const double> alphas,
                 const double* gamma, double* y, IcsBuffers buf) {
    const std::size_t steps = alphas.size();
    const std::size_t block = n * d;
    const double dd = static_cast<double>(d);
#pragma omp parallel for schedule(static) if (n * d * (steps + 1) > kParallelWork)
    for (std::size_t r = 0; r < n; ++r) {
        const double* zr = z + r * d;
        double* cur = buf.states + r * d;
        for (std::size_t j = 0; j < d; ++j) cur[j] = zr[j] > 0.0 ? zr[j] : 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            double* next = cur + block;
            double sum = 0.0;
            for (std::size_t j = 0; j < d; ++j) sum += cur[j];
            const double mu = sum / dd;
            buf.mu[t * n + r] = mu;
            const double cut = alphas[t] * mu;
            for (std::size_t j = 0; j < d; ++j) {
                const double u = cur[j] - cut;
                next[j] = u > 0.0 ? u : 0.0;
            }
            cur = next;
        }
        double* yr = y + r * d;
        if (gamma)
            for (std::size_t j = 0; j < d; ++j) yr[j] = gamma[j] * cur[j];
        else
            for (std::size_t j = 0; j < d; ++j) yr[j] = cur[j];
    }
}

void ics_backward(const double* dy, std::size_t n, std::size_t d, std::span<const double> alphas,
                  const double* gamma, IcsBuffers buf, double* dz, double* dalpha, double* dgamma) {
    const std::size_t steps = alphas.size();
    const std::size_t block = n * d;
    const double inv_d = 1.0 / static_cast<double>(d);
    if (dgamma) {
        const double* last = buf.states + steps * block;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < d; ++j) dgamma[j] += dy[r * d + j] * last[r * d + j];
    }
    // Per-row alpha contributions, reduced afterwards in row order.
    std::vector<double> row_dalpha(n * steps);
#pragma omp parallel for schedule(static) if (n * d * (steps + 1) > kParallelWork)
    for (std::size_t r = 0; r < n; ++r) {
        double* g = dz + r * d;
        for (std::size_t j = 0; j < d; ++j) g[j] = gamma ? dy[r * d + j] * gamma[j] : dy[r * d + j];
        for (std::size_t t = steps; t-- > 0;) {
            const double* next = buf.states + (t + 1) * block + r * d;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                if (!(next[j] > 0.0)) g[j] = 0.0;
                s += g[j];
            }
            row_dalpha[r * steps + t] = -s * buf.mu[t * n + r];
            const double shift = alphas[t] * s * inv_d;
            for (std::size_t j = 0; j < d; ++j) g[j] -= shift;
        }
        const double* x0 = buf.states + r * d;
        for (std::size_t j = 0; j < d; ++j)
            if (!(x0[j] > 0.0)) g[j] = 0.0;
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t t = steps; t-- > 0;) dalpha[t] += row_dalpha[r * steps + t];
}

void layer_norm_forward(const double* x, std::size_t n, std::size_t d, const double* scale,
                        const double* shift, double eps, double* y, double* xhat, double* inv_std) {
    const double dd = static_cast<double>(d);
#pragma omp parallel for schedule(static) if (n * d > kParallelWork)
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= dd;
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= dd;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        double* hr = xhat + r * d;
        double* yr = y + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            hr[j] = (xr[j] - mean) * is;
            yr[j] = scale ? hr[j] * scale[j] + shift[j] : hr[j];
        }
    }
}

void layer_norm_backward(const double* dy, std::size_t n, std::size_t d, const double* scale,
                         const double* xhat, const double* inv_std, double* dx, double* dscale,
                         double* dshift) {
    if (dscale) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < d; ++j) {
                dscale[j] += dy[r * d + j] * xhat[r * d + j];
                dshift[j] += dy[r * d + j];
            }
    }
    const double inv_d = 1.0 / static_cast<double>(d);
#pragma omp parallel for schedule(static) if (n * d > kParallelWork)
    for (std::size_t r = 0; r < n; ++r) {
        double mg = 0.0, mgx = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double g = scale ? dy[r * d + j] * scale[j] : dy[r * d + j];
            mg += g;
            mgx += g * xhat[r * d + j];
        }
        mg *= inv_d;
        mgx *= inv_d;
        for (std::size_t j = 0; j < d; ++j) {
            const double g = scale ? dy[r * d + j] * scale[j] : dy[r * d + j];
            dx[r * d + j] += inv_std[r] * (g - mg - xhat[r * d + j] * mgx);
        }
    }
}

}  // namespace ssr::kernels::omp
