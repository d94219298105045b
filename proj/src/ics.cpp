#include "ssr/ics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>

#include "ssr/error.hpp"
#include "ssr/rng.hpp"

namespace ssr {

void IcsTrace::write_csv(std::ostream& os) const {
    os << "step,sparsity,mean_abs,mu\n";
    for (std::size_t t = 0; t < size(); ++t) os << t << ',' << sparsity[t] << ',' << mean_abs[t] << ',' << mu[t] << '\n';
}

double alpha_to_raw(double alpha) {
    if (!(alpha > 0.0)) throw ContractError("extinction rate must be positive");
    // log(exp(a) - 1), rearranged to stay accurate for large a
    return alpha + std::log(-std::expm1(-alpha));
}

double raw_to_alpha(double raw) { return std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw))); }

IcsParams make_ics_params(ParameterStore& store, const std::string& prefix, std::size_t iterations,
                          std::size_t width, double alpha_init, bool use_gamma) {
    IcsParams p;
    p.iterations = iterations;
    p.width = width;
    p.alpha_raw = &store.add(prefix + ".ics_alpha_raw", Tensor({iterations}, alpha_to_raw(alpha_init)));
    if (use_gamma) p.gamma = &store.add(prefix + ".ics_gamma", Tensor({width}, 1.0));
    return p;
}

Var ics(Var z, Var alphas, const Var* gamma, IcsTrace* trace) {
    const Tensor& zv = z.value();
    const Tensor& av = alphas.value();
    const std::size_t n = zv.rows(), d = zv.cols(), steps = av.numel();
    if (gamma && gamma->value().numel() != d)
        throw DimensionError("ics: input width " + std::to_string(d) + " does not match gamma length " +
                             std::to_string(gamma->value().numel()));
    for (double a : av.values())
        if (!(a > 0.0)) throw ContractError("ics: extinction rates must be positive");

    auto states = std::make_shared<std::vector<double>>((steps + 1) * n * d);
    auto mu = std::make_shared<std::vector<double>>(steps * n);
    const kernels::IcsBuffers buf{states->data(), mu->data()};
    const double* gp = gamma ? gamma->value().data() : nullptr;
    Tensor out(zv.shape());
    if (kernels::backend() == kernels::Backend::Reference)
        kernels::reference::ics_forward(zv.data(), n, d, av.values(), gp, out.data(), buf);
    else
        kernels::omp::ics_forward(zv.data(), n, d, av.values(), gp, out.data(), buf);

    Tape& tape = *z.tape;
    tape.note_kinks(zv.values());
    for (std::size_t t = 1; t <= steps; ++t)
        tape.note_kinks(std::span<const double>(states->data() + t * n * d, n * d));

    if (trace) {
        *trace = IcsTrace{};
        const std::size_t block = n * d;
        for (std::size_t t = 0; t <= steps; ++t) {
            const double* x = states->data() + t * block;
            std::size_t zeros = 0;
            double total = 0.0;
            for (std::size_t i = 0; i < block; ++i) {
                zeros += x[i] == 0.0;
                total += x[i];
            }
            const double denom = block ? static_cast<double>(block) : 1.0;
            trace->sparsity.push_back(static_cast<double>(zeros) / denom);
            trace->mean_abs.push_back(total / denom);  // states are non-negative
            trace->mu.push_back(total / denom);        // batch mean of row means (equal row widths)
        }
    }

    std::vector<std::size_t> in{z.id, alphas.id};
    const std::size_t gid = gamma ? gamma->id : 0;
    if (gamma) in.push_back(gid);
    const bool has_gamma = gamma != nullptr;
    const std::uint64_t flops = n * d * (1 + 3 * steps + (has_gamma ? 1 : 0));
    return tape.record(
        std::move(out), in,
        [zid = z.id, aid = alphas.id, gid, has_gamma, n, d, steps, states, mu](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& av = t.value(aid);
            const double* gp = has_gamma ? t.value(gid).data() : nullptr;
            std::vector<double> dalpha(steps, 0.0);
            std::vector<double> dgamma_scratch;
            double* dgamma = nullptr;
            if (has_gamma && t.needs_grad(gid)) dgamma = t.grad(gid).data();
            std::vector<double> dz(n * d);
            const kernels::IcsBuffers buf{states->data(), mu->data()};
            if (kernels::backend() == kernels::Backend::Reference)
                kernels::reference::ics_backward(g.data(), n, d, av.values(), gp, buf, dz.data(), dalpha.data(), dgamma);
            else
                kernels::omp::ics_backward(g.data(), n, d, av.values(), gp, buf, dz.data(), dalpha.data(), dgamma);
            if (t.needs_grad(zid)) {
                Tensor& gz = t.grad(zid);
                for (std::size_t i = 0; i < n * d; ++i) gz[i] += dz[i];
            }
            if (t.needs_grad(aid)) {
                Tensor& ga = t.grad(aid);
                for (std::size_t s = 0; s < steps; ++s) ga[s] += dalpha[s];
            }
        },
        flops);
}

Var ics_forward(Var z, const IcsParams& params, IcsTrace* trace) {
    if (z.value().cols() != params.width)
        throw DimensionError("ics_forward: input width " + std::to_string(z.value().cols()) +
                             " does not match operating width " + std::to_string(params.width));
    Tape& tape = *z.tape;
    Var alphas = softplus(tape.param(*params.alpha_raw));
    if (params.gamma) {
        Var gamma = tape.param(*params.gamma);
        return ics(z, alphas, &gamma, trace);
    }
    return ics(z, alphas, nullptr, trace);
}

double ics_sparsity(const Tensor& y) {
    if (y.numel() == 0) return 0.0;
    const auto zeros = std::count(y.values().begin(), y.values().end(), 0.0);
    return static_cast<double>(zeros) / static_cast<double>(y.numel());
}

Var ste_topk(Var z, std::size_t k) {
    const Tensor& zv = z.value();
    const std::size_t n = zv.rows(), d = zv.cols();
    if (k < 1 || k > d)
        throw ContractError("ste_topk: k=" + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
    Tensor out(zv.shape());
    std::vector<unsigned char> keep(n * d, 0);
    std::vector<std::size_t> order(d);
    for (std::size_t r = 0; r < n; ++r) {
        const double* zr = zv.data() + r * d;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [zr](std::size_t a, std::size_t b) { return std::abs(zr[a]) > std::abs(zr[b]); });
        for (std::size_t j = 0; j < k; ++j) {
            keep[r * d + order[j]] = 1;
            out[r * d + order[j]] = zr[order[j]];
        }
    }
    z.tape->note_kink_mask(keep);
    const std::size_t in[] = {z.id};
    return z.tape->record(std::move(out), in,
                          [zid = z.id](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gz = t.grad(zid);
                              for (std::size_t i = 0; i < g.numel(); ++i) gz[i] += g[i];
                          },
                          zv.numel());
}

kernels::IcsOpCounter ics_complexity_probe(std::size_t d, std::size_t iterations, std::size_t trials,
                                           std::uint64_t seed) {
    if (d < 1 || trials < 1) throw ContractError("ics_complexity_probe: d and trials must be >= 1");
    Rng rng(seed);
    std::vector<double> z(trials * d), y(trials * d), gamma(d, 1.0);
    for (double& v : z) v = rng.normal();
    std::vector<double> alphas(iterations, 0.1);
    kernels::IcsOpCounter counter;
    kernels::reference::ics_forward_counted(z.data(), trials, d, alphas, gamma.data(), y.data(), counter);
    return counter;
}

}  // namespace ssr
