#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "purelearn/tensor.hpp"

namespace pl {

// Handle into a Tape. Only valid for the tape that issued it.
struct Var {
    uint32_t idx = UINT32_MAX;
};

// Reverse-mode gradient tape. Records one forward computation, then plays
// it backward exactly once. Build a fresh Tape per training step; a Tape is
// not reusable after backward() and is not thread-safe.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf tensor. Gradients accumulate only where requires_grad is set.
    Var input(Tensor value, bool requires_grad);

    // a (r×k) @ b (k×c) -> (r×c)
    Var matmul(Var a, Var b);
    // x (m×in) @ W (out×in)^T + b (1×out broadcast over rows) -> (m×out)
    Var linear(Var x, Var w, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double s);
    Var relu(Var a);
    // Mean over all coordinates -> (1×1)
    Var mean_all(Var a);
    // Row-wise log softmax, stabilized by subtracting each row's max.
    Var log_softmax_rows(Var a);
    // -(1/m) sum_i logp[i, labels[i]] -> (1×1). Labels must lie in [0, cols).
    Var nll_mean(Var logp, const std::vector<uint16_t>& labels);

    // Seeds d(root)/d(root) = 1 and accumulates gradients into every
    // requires_grad node. Root must be 1×1. Callable once per tape.
    void backward(Var root);

    const Tensor& value(Var v) const;
    // Gradient of the backward root w.r.t. v. Requires backward() first and
    // that v was recorded with requires_grad.
    const Tensor& grad(Var v) const;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void()> backprop;
    };

    Var record(Tensor value, bool requires_grad, std::function<void()> backprop);
    const Node& node(Var v) const;
    Node& node(Var v);
    // Accumulates g into the grad buffer of v if it participates in autodiff.
    void accumulate(Var v, const Tensor& g);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

// Max over coordinates of |analytic - central| / (|analytic| + |central| + 1e-12),
// where central is the two-sided difference quotient of f at x with step h.
double finite_diff_check(const std::function<double(const Tensor&)>& f,
                         const Tensor& x,
                         const Tensor& analytic_grad,
                         double h);

}  // namespace pl
