#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <deque>
#include <vector>

#include "ssr/tensor.hpp"

namespace ssr {

/// A named, persistent trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Ordered registry of parameters. Addresses are stable for the registry's
/// lifetime, so tapes may hold raw pointers into it during a pass.
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;
    ParameterStore(ParameterStore&&) = default;
    ParameterStore& operator=(ParameterStore&&) = default;

    Parameter& add(std::string name, Tensor init);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }
    std::vector<std::string> names() const;

    void zero_grad();
    std::size_t total_numel() const;

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Tensor& grad() const;
    const Shape& shape() const { return value().shape(); }
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// which is a topological order by construction; backward walks it in reverse.
/// A tape is single-threaded; the kernels it calls parallelise internally.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Var constant(Tensor value);
    /// Leaf whose gradient is wanted (gradient checks, input sensitivities).
    Var variable(Tensor value);
    /// Leaf bound to a parameter; backward() accumulates into `p.grad`.
    /// The node aliases `p.value`, which must stay unchanged until the tape is discarded.
    /// With `no_grad` set the leaf is treated as a constant.
    Var param(Parameter& p);

    /// Appends an operation node. `backward` runs only when some input needs a gradient.
    Var record(Tensor value, std::span<const std::size_t> inputs, BackwardFn backward,
               std::uint64_t flops);

    const Tensor& value(std::size_t id) const {
        const Node& n = nodes_[id];
        return n.ref ? *n.ref : n.value;
    }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    /// Gradient buffer of a node, allocated as zeros on first use.
    Tensor& grad(std::size_t id);
    const Tensor& grad(std::size_t id) const;

    /// Reverse accumulation from a scalar loss. Throws ContractError otherwise.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    /// Inference FLOPs of every op recorded so far, by the conventions in complexity.hpp.
    std::uint64_t flops() const { return flops_; }

    /// Folds the active/inactive pattern of a piecewise-smooth op into a
    /// running signature. Two evaluations with equal signatures lie on the
    /// same smooth piece, which is what gradient checks use to skip kinks.
    void note_kinks(std::span<const double> args);
    void note_kink_mask(std::span<const unsigned char> mask);
    std::uint64_t kink_signature() const { return kink_hash_; }

    bool training = false;
    bool no_grad = false;
    /// Off by default; only gradient checks pay for the signature.
    bool track_kinks = false;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        const Tensor* ref = nullptr;  // parameter leaves alias the parameter's storage
        bool needs_grad = false;
        bool has_grad = false;
        BackwardFn backward;
        Parameter* param = nullptr;
    };
    std::deque<Node> nodes_;  // stable addresses: Var::value() hands out references
    std::uint64_t flops_ = 0;
    std::uint64_t kink_hash_ = 0xcbf29ce484222325ULL;
};

// ---- primitive operations -------------------------------------------------

Var matmul(Var a, Var b);
/// x[n x d] + bias[d] broadcast over rows.
Var add_bias(Var x, Var bias);
Var add(Var a, Var b);
Var scale(Var x, double s);
/// Elementwise product with a constant tensor of the same shape.
Var mul_const(Var x, const Tensor& c);
/// Elementwise product of two same-shape tensors.
Var mul(Var a, Var b);
Var relu(Var x);
/// Exact x * Phi(x).
Var gelu(Var x);
Var sigmoid(Var x);
Var softplus(Var x);
/// Per-row standardisation over the last axis with optional affine scale/shift.
Var layer_norm(Var x, double eps = 1e-5);
Var layer_norm(Var x, Var scale, Var shift, double eps = 1e-5);
Var mean_last_axis(Var x);
Var concat_last_axis(std::span<const Var> parts);
Var slice_last_axis(Var x, std::size_t begin, std::size_t end);
/// Output column j is input column indices[j]; gradients scatter-add back.
Var gather_columns(Var x, std::span<const std::size_t> indices);
/// Elementwise mean of same-shape tensors.
Var average(std::span<const Var> parts);
Var sum(Var x);
Var reshape(Var x, Shape shape);
/// Mean binary cross-entropy on logits, in the log-sum-exp stable form.
Var sigmoid_bce(Var logits, const Tensor& labels);
/// Rows of `table[vocab x dim]` selected by `ids`.
Var embedding_lookup(Var table, std::span<const std::uint32_t> ids);

}  // namespace ssr
