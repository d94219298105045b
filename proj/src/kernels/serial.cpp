#include <atomic>
#include <cmath>
#include <vector>

#include "ssr/kernels.hpp"

namespace ssr::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::OpenMP};
}

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

namespace reference {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
}

void matmul_abt_acc(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
                    std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += dc[i * n + j] * b[p * n + j];
            da[i * k + p] += s;
        }
}

void matmul_atb_acc(const double* a, const double* dc, double* db, std::size_t m, std::size_t k,
                    std::size_t n) {
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += a[i * k + p] * dc[i * n + j];
            db[p * n + j] += s;
        }
}

void ics_forward(const double* z, std::size_t n, std::size_t d, std::span<const double> alphas,
                 const double* gamma, double* y, IcsBuffers buf) {
    const std::size_t steps = alphas.size();
    const std::size_t block = n * d;
    for (std::size_t r = 0; r < n; ++r) {
        double* x0 = buf.states + r * d;
        for (std::size_t j = 0; j < d; ++j) x0[j] = z[r * d + j] > 0.0 ? z[r * d + j] : 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            const double* cur = buf.states + t * block + r * d;
            double* next = buf.states + (t + 1) * block + r * d;
            double sum = 0.0;
            for (std::size_t j = 0; j < d; ++j) sum += cur[j];
            const double mu = sum / static_cast<double>(d);
            buf.mu[t * n + r] = mu;
            const double cut = alphas[t] * mu;
            for (std::size_t j = 0; j < d; ++j) {
                const double u = cur[j] - cut;
                next[j] = u > 0.0 ? u : 0.0;
            }
        }
        const double* last = buf.states + steps * block + r * d;
        for (std::size_t j = 0; j < d; ++j) y[r * d + j] = gamma ? gamma[j] * last[j] : last[j];
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
            dalpha[t] += -s * buf.mu[t * n + r];
            const double shift = alphas[t] * s * inv_d;
            for (std::size_t j = 0; j < d; ++j) g[j] -= shift;
        }
        const double* x0 = buf.states + r * d;
        for (std::size_t j = 0; j < d; ++j)
            if (!(x0[j] > 0.0)) g[j] = 0.0;
    }
}

void ics_forward_counted(const double* z, std::size_t n, std::size_t d, std::span<const double> alphas,
                         const double* gamma, double* y, IcsOpCounter& counter) {
    std::vector<double> x(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = z[r * d + j] > 0.0 ? z[r * d + j] : 0.0;
            ++counter.init_ops;  // compare
        }
        for (double alpha : alphas) {
            double sum = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                sum += x[j];
                ++counter.iterative_ops;  // add
            }
            const double cut = alpha * (sum / static_cast<double>(d));
            counter.iterative_ops += 2;  // divide, scale
            for (std::size_t j = 0; j < d; ++j) {
                const double u = x[j] - cut;
                x[j] = u > 0.0 ? u : 0.0;
                counter.iterative_ops += 2;  // subtract, compare
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            y[r * d + j] = gamma ? gamma[j] * x[j] : x[j];
            if (gamma) ++counter.recovery_ops;
        }
    }
}

void layer_norm_forward(const double* x, std::size_t n, std::size_t d, const double* scale,
                        const double* shift, double eps, double* y, double* xhat, double* inv_std) {
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - mean) * is;
            xhat[r * d + j] = h;
            y[r * d + j] = scale ? h * scale[j] + shift[j] : h;
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

}  // namespace reference
}  // namespace ssr::kernels
