#include "ssr/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "ssr/error.hpp"
#include "ssr/kernels.hpp"

namespace ssr {

// ---- ParameterStore --------------------------------------------------------

Parameter& ParameterStore::add(std::string name, Tensor init) {
    if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->grad = Tensor(init.shape());
    p->value = std::move(init);
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Parameter& ParameterStore::at(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw ContractError("no parameter named '" + name + "'");
}

const Parameter& ParameterStore::at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw ContractError("no parameter named '" + name + "'");
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->name);
    return out;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p->grad.fill(0.0);
}

std::size_t ParameterStore::total_numel() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
}

// ---- Tape ------------------------------------------------------------------

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, false, false, {}, nullptr});
    return Var{this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, true, false, {}, nullptr});
    return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
    nodes_.push_back(Node{{}, {}, &p.value, !no_grad, false, {}, no_grad ? nullptr : &p});
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const std::size_t> inputs, BackwardFn backward,
                 std::uint64_t flops) {
    bool needs = false;
    for (auto id : inputs) needs = needs || nodes_[id].needs_grad;
    flops_ += flops;
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs, false, needs ? std::move(backward) : BackwardFn{}, nullptr});
    return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(value(id).shape());
        n.has_grad = true;
    }
    return n.grad;
}

const Tensor& Tape::grad(std::size_t id) const {
    const Node& n = nodes_[id];
    if (!n.has_grad) throw ContractError("node has no gradient; call backward() first");
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw ContractError("loss belongs to a different tape");
    if (value(loss.id).numel() != 1)
        throw ContractError("backward() needs a scalar loss, got shape " + shape_str(value(loss.id).shape()));
    grad(loss.id).fill(1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || !n.has_grad) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param) {
            auto& pg = n.param->grad;
            for (std::size_t k = 0; k < pg.numel(); ++k) pg[k] += n.grad[k];
        }
    }
}

void Tape::note_kinks(std::span<const double> args) {
    if (!track_kinks) return;
    for (double a : args) {
        kink_hash_ ^= (a > 0.0 ? 0x9dULL : 0x3bULL);
        kink_hash_ *= 0x100000001b3ULL;
    }
}

void Tape::note_kink_mask(std::span<const unsigned char> mask) {
    if (!track_kinks) return;
    for (auto m : mask) {
        kink_hash_ ^= (m ? 0x9dULL : 0x3bULL);
        kink_hash_ *= 0x100000001b3ULL;
    }
}

// ---- kernels dispatch -------------------------------------------------------

namespace {

void k_matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (kernels::backend() == kernels::Backend::Reference)
        kernels::reference::matmul(a, b, c, m, k, n);
    else
        kernels::omp::matmul(a, b, c, m, k, n);
}
void k_abt(const double* dc, const double* b, double* da, std::size_t m, std::size_t k, std::size_t n) {
    if (kernels::backend() == kernels::Backend::Reference)
        kernels::reference::matmul_abt_acc(dc, b, da, m, k, n);
    else
        kernels::omp::matmul_abt_acc(dc, b, da, m, k, n);
}
void k_atb(const double* a, const double* dc, double* db, std::size_t m, std::size_t k, std::size_t n) {
    if (kernels::backend() == kernels::Backend::Reference)
        kernels::reference::matmul_atb_acc(a, dc, db, m, k, n);
    else
        kernels::omp::matmul_atb_acc(a, dc, db, m, k, n);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
}

Shape leading(const Shape& s) {
    if (s.empty()) return {};
    return Shape(s.begin(), s.end() - 1);
}

Shape with_last(const Shape& s, std::size_t last) {
    Shape out = leading(s);
    out.push_back(last);
    return out;
}

template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = fwd(xv[i]);
    const std::size_t in[] = {x.id};
    return x.tape->record(std::move(out), in,
                          [xid = x.id, deriv](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              const Tensor& xv = t.value(xid);
                              const Tensor& yv = t.value(self);
                              Tensor& gx = t.grad(xid);
                              for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
                          },
                          xv.numel());
}

}  // namespace

// ---- ops -------------------------------------------------------------------

Var matmul(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0])
        throw DimensionError("matmul: cannot multiply " + shape_str(av.shape()) + " by " + shape_str(bv.shape()));
    const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
    Tensor out({m, n});
    k_matmul(av.data(), bv.data(), out.data(), m, k, n);
    const std::size_t in[] = {a.id, b.id};
    return a.tape->record(std::move(out), in,
                          [aid = a.id, bid = b.id, m, k, n](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              if (t.needs_grad(aid)) k_abt(g.data(), t.value(bid).data(), t.grad(aid).data(), m, k, n);
                              if (t.needs_grad(bid)) k_atb(t.value(aid).data(), g.data(), t.grad(bid).data(), m, k, n);
                          },
                          2ULL * m * k * n);
}

Var add_bias(Var x, Var bias) {
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    if (bv.rank() != 1 || bv.numel() != xv.cols())
        throw DimensionError("add_bias: bias " + shape_str(bv.shape()) + " does not match input " + shape_str(xv.shape()));
    Tensor out = xv;
    const std::size_t rows = xv.rows(), d = xv.cols();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] += bv[j];
    const std::size_t in[] = {x.id, bias.id};
    return x.tape->record(std::move(out), in,
                          [xid = x.id, bid = bias.id, rows, d](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              if (t.needs_grad(xid)) {
                                  Tensor& gx = t.grad(xid);
                                  for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
                              }
                              if (t.needs_grad(bid)) {
                                  Tensor& gb = t.grad(bid);
                                  for (std::size_t r = 0; r < rows; ++r)
                                      for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
                              }
                          },
                          xv.numel());
}

Var add(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
    const std::size_t in[] = {a.id, b.id};
    const std::size_t n = out.numel();
    return a.tape->record(std::move(out), in,
                          [aid = a.id, bid = b.id](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              for (std::size_t id : {aid, bid}) {
                                  if (!t.needs_grad(id)) continue;
                                  Tensor& gi = t.grad(id);
                                  for (std::size_t i = 0; i < g.numel(); ++i) gi[i] += g[i];
                              }
                          },
                          n);
}

Var scale(Var x, double s) {
    return unary(
        x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Var mul_const(Var x, const Tensor& c) {
    require_same_shape(x.value(), c, "mul_const");
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c[i];
    const std::size_t in[] = {x.id};
    const std::size_t n = out.numel();
    return x.tape->record(std::move(out), in,
                          [xid = x.id, c](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gx = t.grad(xid);
                              for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * c[i];
                          },
                          n);
}

Var mul(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
    const std::size_t in[] = {a.id, b.id};
    const std::size_t n = out.numel();
    return a.tape->record(std::move(out), in,
                          [aid = a.id, bid = b.id](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              if (t.needs_grad(aid)) {
                                  const Tensor& bv = t.value(bid);
                                  Tensor& ga = t.grad(aid);
                                  for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
                              }
                              if (t.needs_grad(bid)) {
                                  const Tensor& av = t.value(aid);
                                  Tensor& gb = t.grad(bid);
                                  for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
                              }
                          },
                          n);
}

Var relu(Var x) {
    x.tape->note_kinks(x.value().values());
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var x) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return unary(
        x, [](double v) { return v * 0.5 * std::erfc(-v * inv_sqrt2); },
        [](double v, double) { return 0.5 * std::erfc(-v * inv_sqrt2) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v); });
}

namespace {
double stable_sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}
}  // namespace

Var sigmoid(Var x) {
    return unary(
        x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var x) {
    return unary(
        x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) { return stable_sigmoid(v); });
}

namespace {

Var layer_norm_impl(Var x, const Var* scale, const Var* shift, double eps) {
    if (!(eps > 0.0)) throw ContractError("layer_norm: eps must be positive");
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    if (scale && (scale->value().numel() != d || shift->value().numel() != d))
        throw DimensionError("layer_norm: affine parameters do not match width " + std::to_string(d));
    auto xhat = std::make_shared<std::vector<double>>(n * d);
    auto inv_std = std::make_shared<std::vector<double>>(n);
    Tensor out(xv.shape());
    const double* sc = scale ? scale->value().data() : nullptr;
    const double* sh = scale ? shift->value().data() : nullptr;
    if (kernels::backend() == kernels::Backend::Reference)
        kernels::reference::layer_norm_forward(xv.data(), n, d, sc, sh, eps, out.data(), xhat->data(), inv_std->data());
    else
        kernels::omp::layer_norm_forward(xv.data(), n, d, sc, sh, eps, out.data(), xhat->data(), inv_std->data());
    std::vector<std::size_t> in{x.id};
    const std::size_t sid = scale ? scale->id : 0, hid = scale ? shift->id : 0;
    if (scale) {
        in.push_back(sid);
        in.push_back(hid);
    }
    const bool affine = scale != nullptr;
    return x.tape->record(
        std::move(out), in,
        [xid = x.id, sid, hid, affine, n, d, xhat, inv_std](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const double* sc = affine ? t.value(sid).data() : nullptr;
            double* dsc = affine && t.needs_grad(sid) ? t.grad(sid).data() : nullptr;
            double* dsh = affine && t.needs_grad(hid) ? t.grad(hid).data() : nullptr;
            // Kernels update scale/shift together; route through scratch if only one is wanted.
            std::vector<double> scratch_sc, scratch_sh;
            if (affine && (dsc == nullptr) != (dsh == nullptr)) {
                if (!dsc) { scratch_sc.assign(d, 0.0); dsc = scratch_sc.data(); }
                if (!dsh) { scratch_sh.assign(d, 0.0); dsh = scratch_sh.data(); }
            }
            std::vector<double> scratch_dx;
            double* dx;
            if (t.needs_grad(xid)) {
                dx = t.grad(xid).data();
            } else {
                scratch_dx.assign(n * d, 0.0);
                dx = scratch_dx.data();
            }
            if (kernels::backend() == kernels::Backend::Reference)
                kernels::reference::layer_norm_backward(g.data(), n, d, sc, xhat->data(), inv_std->data(), dx, dsc, dsh);
            else
                kernels::omp::layer_norm_backward(g.data(), n, d, sc, xhat->data(), inv_std->data(), dx, dsc, dsh);
        },
        6ULL * n * d);
}

}  // namespace

Var layer_norm(Var x, double eps) { return layer_norm_impl(x, nullptr, nullptr, eps); }
Var layer_norm(Var x, Var scale, Var shift, double eps) { return layer_norm_impl(x, &scale, &shift, eps); }

Var mean_last_axis(Var x) {
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    if (d == 0) throw ContractError("mean_last_axis: empty last axis");
    Tensor out(with_last(xv.shape(), 1));
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += xv[r * d + j];
        out[r] = s / static_cast<double>(d);
    }
    const std::size_t in[] = {x.id};
    return x.tape->record(std::move(out), in,
                          [xid = x.id, n, d](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gx = t.grad(xid);
                              const double inv = 1.0 / static_cast<double>(d);
                              for (std::size_t r = 0; r < n; ++r)
                                  for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[r] * inv;
                          },
                          xv.numel());
}

Var concat_last_axis(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_last_axis: no parts");
    const Shape lead = leading(parts[0].shape());
    std::size_t total = 0;
    std::vector<std::size_t> widths, ids;
    for (const Var& p : parts) {
        if (leading(p.shape()) != lead)
            throw DimensionError("concat_last_axis: leading shape " + shape_str(p.shape()) + " differs from " +
                                 shape_str(parts[0].shape()));
        widths.push_back(p.value().cols());
        ids.push_back(p.id);
        total += widths.back();
    }
    const std::size_t rows = parts[0].value().rows();
    Tensor out(with_last(parts[0].shape(), total));
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& pv = parts[k].value();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < widths[k]; ++j) out[r * total + off + j] = pv[r * widths[k] + j];
        off += widths[k];
    }
    return parts[0].tape->record(std::move(out), ids,
                                 [ids, widths, rows, total](Tape& t, std::size_t self) {
                                     const Tensor& g = t.grad(self);
                                     std::size_t off = 0;
                                     for (std::size_t k = 0; k < ids.size(); ++k) {
                                         if (t.needs_grad(ids[k])) {
                                             Tensor& gp = t.grad(ids[k]);
                                             for (std::size_t r = 0; r < rows; ++r)
                                                 for (std::size_t j = 0; j < widths[k]; ++j)
                                                     gp[r * widths[k] + j] += g[r * total + off + j];
                                         }
                                         off += widths[k];
                                     }
                                 },
                                 0);
}

Var slice_last_axis(Var x, std::size_t begin, std::size_t end) {
    const Tensor& xv = x.value();
    const std::size_t d = xv.cols(), rows = xv.rows();
    if (begin > end || end > d)
        throw IndexError("slice_last_axis: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside width " + std::to_string(d));
    const std::size_t w = end - begin;
    Tensor out(with_last(xv.shape(), w));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] = xv[r * d + begin + j];
    const std::size_t in[] = {x.id};
    return x.tape->record(std::move(out), in,
                          [xid = x.id, rows, d, w, begin](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gx = t.grad(xid);
                              for (std::size_t r = 0; r < rows; ++r)
                                  for (std::size_t j = 0; j < w; ++j) gx[r * d + begin + j] += g[r * w + j];
                          },
                          0);
}

Var gather_columns(Var x, std::span<const std::size_t> indices) {
    const Tensor& xv = x.value();
    const std::size_t d = xv.cols(), rows = xv.rows(), w = indices.size();
    for (std::size_t idx : indices)
        if (idx >= d)
            throw IndexError("gather_columns: index " + std::to_string(idx) + " out of range for width " +
                             std::to_string(d));
    Tensor out(with_last(xv.shape(), w));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] = xv[r * d + indices[j]];
    const std::size_t in[] = {x.id};
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return x.tape->record(std::move(out), in,
                          [xid = x.id, rows, d, w, idx = std::move(idx)](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gx = t.grad(xid);
                              for (std::size_t r = 0; r < rows; ++r)
                                  for (std::size_t j = 0; j < w; ++j) gx[r * d + idx[j]] += g[r * w + j];
                          },
                          0);
}

Var average(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("average: no parts");
    Tensor out(parts[0].shape());
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        require_same_shape(p.value(), out, "average");
        const Tensor& pv = p.value();
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += pv[i];
        ids.push_back(p.id);
    }
    const double inv = 1.0 / static_cast<double>(parts.size());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= inv;
    const std::uint64_t flops = static_cast<std::uint64_t>(parts.size()) * out.numel();
    return parts[0].tape->record(std::move(out), ids,
                                 [ids, inv](Tape& t, std::size_t self) {
                                     const Tensor& g = t.grad(self);
                                     for (std::size_t id : ids) {
                                         if (!t.needs_grad(id)) continue;
                                         Tensor& gp = t.grad(id);
                                         for (std::size_t i = 0; i < g.numel(); ++i) gp[i] += g[i] * inv;
                                     }
                                 },
                                 flops);
}

Var sum(Var x) {
    const Tensor& xv = x.value();
    double s = 0.0;
    for (double v : xv.values()) s += v;
    const std::size_t in[] = {x.id};
    return x.tape->record(Tensor::scalar(s), in,
                          [xid = x.id](Tape& t, std::size_t self) {
                              const double g = t.grad(self)[0];
                              Tensor& gx = t.grad(xid);
                              for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
                          },
                          xv.numel());
}

Var reshape(Var x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    const std::size_t in[] = {x.id};
    return x.tape->record(std::move(out), in,
                          [xid = x.id](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gx = t.grad(xid);
                              for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
                          },
                          0);
}

Var sigmoid_bce(Var logits, const Tensor& labels) {
    const Tensor& lv = logits.value();
    if (lv.numel() != labels.numel())
        throw DimensionError("sigmoid_bce: logits " + shape_str(lv.shape()) + " vs labels " + shape_str(labels.shape()));
    const std::size_t n = lv.numel();
    if (n == 0) throw ContractError("sigmoid_bce: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = lv[i];
        total += std::max(l, 0.0) - l * labels[i] + std::log1p(std::exp(-std::abs(l)));
    }
    const std::size_t in[] = {logits.id};
    return logits.tape->record(Tensor::scalar(total / static_cast<double>(n)), in,
                               [lid = logits.id, labels, n](Tape& t, std::size_t self) {
                                   const double g = t.grad(self)[0] / static_cast<double>(n);
                                   const Tensor& lv = t.value(lid);
                                   Tensor& gl = t.grad(lid);
                                   for (std::size_t i = 0; i < n; ++i) gl[i] += g * (stable_sigmoid(lv[i]) - labels[i]);
                               },
                               0);
}

Var embedding_lookup(Var table, std::span<const std::uint32_t> ids) {
    const Tensor& tv = table.value();
    if (tv.rank() != 2) throw DimensionError("embedding_lookup: table must be a matrix");
    const std::size_t vocab = tv.shape()[0], dim = tv.shape()[1], n = ids.size();
    Tensor out({n, dim});
    for (std::size_t r = 0; r < n; ++r) {
        if (ids[r] >= vocab)
            throw IndexError("embedding_lookup: id " + std::to_string(ids[r]) + " >= vocabulary size " +
                             std::to_string(vocab));
        std::copy_n(tv.data() + ids[r] * dim, dim, out.data() + r * dim);
    }
    const std::size_t in[] = {table.id};
    std::vector<std::uint32_t> idv(ids.begin(), ids.end());
    return table.tape->record(std::move(out), in,
                              [tid = table.id, dim, idv = std::move(idv)](Tape& t, std::size_t self) {
                                  const Tensor& g = t.grad(self);
                                  Tensor& gt = t.grad(tid);
                                  for (std::size_t r = 0; r < idv.size(); ++r)
                                      for (std::size_t j = 0; j < dim; ++j) gt[idv[r] * dim + j] += g[r * dim + j];
                              },
                              0);
}

}  // namespace ssr
