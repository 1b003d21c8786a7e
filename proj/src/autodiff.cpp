#include "purelearn/autodiff.hpp"

#include <cmath>
#include <utility>

#include "purelearn/errors.hpp"

namespace pl {

Var Tape::record(Tensor value, bool requires_grad, std::function<void()> backprop) {
    if (backward_done_) throw Error("tape: cannot record after backward");
    if (nodes_.size() >= UINT32_MAX) throw Error("tape: node count overflow");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    if (requires_grad) n.grad = Tensor(n.value.rows(), n.value.cols(), 0.0);
    nodes_.push_back(std::move(n));
    return Var{static_cast<uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.idx >= nodes_.size()) throw Error("tape: invalid variable handle");
    return nodes_[v.idx];
}

Tape::Node& Tape::node(Var v) {
    if (v.idx >= nodes_.size()) throw Error("tape: invalid variable handle");
    return nodes_[v.idx];
}

void Tape::accumulate(Var v, const Tensor& g) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    if (!n.grad.same_shape(g)) throw Error("tape: gradient shape mismatch");
    double* dst = n.grad.data();
    const double* src = g.data();
    for (size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

Var Tape::input(Tensor value, bool requires_grad) {
    value.check_finite("input");
    return record(std::move(value), requires_grad, nullptr);
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& av = node(a).value;
    const Tensor& bv = node(b).value;
    Tensor out = pl::matmul(av, bv);
    out.check_finite("matmul");
    bool rg = node(a).requires_grad || node(b).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, a, b, o] {
        const Tensor& g = node(o).grad;
        // Frozen operands skip their gradient product entirely.
        if (node(a).requires_grad) accumulate(a, matmul_nt(g, node(b).value));
        if (node(b).requires_grad) accumulate(b, matmul_tn(node(a).value, g));
    });
}

Var Tape::linear(Var x, Var w, Var b) {
    const Tensor& xv = node(x).value;
    const Tensor& wv = node(w).value;
    const Tensor& bv = node(b).value;
    if (bv.rows() != 1 || bv.cols() != wv.rows())
        throw Error("tape: linear bias must be 1 x out");
    Tensor out = add_rowvec(matmul_nt(xv, wv), bv);
    out.check_finite("linear");
    bool rg = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, x, w, b, o] {
        const Tensor& g = node(o).grad;
        // Frozen operands skip their gradient product entirely.
        if (node(x).requires_grad) accumulate(x, pl::matmul(g, node(w).value));
        if (node(w).requires_grad) accumulate(w, matmul_tn(g, node(x).value));
        if (node(b).requires_grad) accumulate(b, colsum(g));
    });
}

Var Tape::add(Var a, Var b) {
    Tensor out = pl::add(node(a).value, node(b).value);
    out.check_finite("add");
    bool rg = node(a).requires_grad || node(b).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, a, b, o] {
        const Tensor& g = node(o).grad;
        accumulate(a, g);
        accumulate(b, g);
    });
}

Var Tape::sub(Var a, Var b) {
    Tensor out = pl::sub(node(a).value, node(b).value);
    out.check_finite("sub");
    bool rg = node(a).requires_grad || node(b).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, a, b, o] {
        const Tensor& g = node(o).grad;
        accumulate(a, g);
        accumulate(b, pl::scale(g, -1.0));
    });
}

Var Tape::scale(Var a, double s) {
    if (!std::isfinite(s)) throw NumericalError("non-finite scale factor");
    Tensor out = pl::scale(node(a).value, s);
    out.check_finite("scale");
    bool rg = node(a).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, a, s, o] {
        accumulate(a, pl::scale(node(o).grad, s));
    });
}

Var Tape::relu(Var a) {
    Tensor out = pl::relu(node(a).value);
    out.check_finite("relu");
    bool rg = node(a).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    // Mask from the output: relu(x) > 0 iff x > 0, so the subgradient at the
    // kink (x = 0) is 0.
    return record(std::move(out), rg, [this, a, o] {
        const Tensor& g = node(o).grad;
        const Tensor& y = node(o).value;
        Tensor ga(g.rows(), g.cols(), 0.0);
        const double* gp = g.data();
        const double* yp = y.data();
        double* op = ga.data();
        for (size_t i = 0; i < g.size(); ++i) op[i] = yp[i] > 0.0 ? gp[i] : 0.0;
        accumulate(a, ga);
    });
}

Var Tape::mean_all(Var a) {
    const Tensor& av = node(a).value;
    if (av.size() == 0) throw Error("tape: mean of empty tensor");
    Tensor out(1, 1, pl::mean(av));
    out.check_finite("mean_all");
    bool rg = node(a).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, a, o] {
        const Tensor& av2 = node(a).value;
        double s = node(o).grad.at(0, 0) / static_cast<double>(av2.size());
        accumulate(a, Tensor(av2.rows(), av2.cols(), s));
    });
}

Var Tape::log_softmax_rows(Var a) {
    const Tensor& av = node(a).value;
    if (av.cols() == 0) throw Error("tape: log_softmax of zero-width tensor");
    Tensor out(av.rows(), av.cols());
    for (size_t r = 0; r < av.rows(); ++r) {
        double mx = av.at(r, 0);
        for (size_t c = 1; c < av.cols(); ++c) mx = std::max(mx, av.at(r, c));
        double sum = 0.0;
        for (size_t c = 0; c < av.cols(); ++c) sum += std::exp(av.at(r, c) - mx);
        double lse = mx + std::log(sum);
        for (size_t c = 0; c < av.cols(); ++c) out.at(r, c) = av.at(r, c) - lse;
    }
    out.check_finite("log_softmax");
    bool rg = node(a).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    // d/dx log_softmax: g - softmax(x) * rowsum(g); softmax = exp(output).
    return record(std::move(out), rg, [this, a, o] {
        const Tensor& g = node(o).grad;
        const Tensor& y = node(o).value;
        Tensor ga(g.rows(), g.cols());
        for (size_t r = 0; r < g.rows(); ++r) {
            double gsum = 0.0;
            for (size_t c = 0; c < g.cols(); ++c) gsum += g.at(r, c);
            for (size_t c = 0; c < g.cols(); ++c)
                ga.at(r, c) = g.at(r, c) - std::exp(y.at(r, c)) * gsum;
        }
        accumulate(a, ga);
    });
}

Var Tape::nll_mean(Var logp, const std::vector<uint16_t>& labels) {
    const Tensor& lv = node(logp).value;
    if (labels.size() != lv.rows()) throw Error("tape: nll_mean label count mismatch");
    if (lv.rows() == 0) throw Error("tape: nll_mean of empty batch");
    double acc = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= lv.cols()) throw Error("tape: label out of range");
        acc -= lv.at(i, labels[i]);
    }
    Tensor out(1, 1, acc / static_cast<double>(lv.rows()));
    out.check_finite("nll_mean");
    bool rg = node(logp).requires_grad;
    Var o{static_cast<uint32_t>(nodes_.size())};
    return record(std::move(out), rg, [this, logp, labels, o] {
        const Tensor& lv2 = node(logp).value;
        double s = node(o).grad.at(0, 0) / static_cast<double>(lv2.rows());
        Tensor ga(lv2.rows(), lv2.cols(), 0.0);
        for (size_t i = 0; i < labels.size(); ++i) ga.at(i, labels[i]) = -s;
        accumulate(logp, ga);
    });
}

void Tape::backward(Var root) {
    if (backward_done_) throw Error("tape: backward already run; build a fresh tape");
    const Node& rn = node(root);
    if (rn.value.rows() != 1 || rn.value.cols() != 1)
        throw Error("tape: backward root must be a 1x1 scalar");
    if (!rn.requires_grad)
        throw Error("tape: backward root does not depend on any gradient leaf");
    backward_done_ = true;
    node(root).grad.at(0, 0) = 1.0;
    for (uint32_t i = root.idx + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.backprop) {
            n.backprop();
            n.grad.check_finite("backward");
        }
    }
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (!n.requires_grad) throw Error("tape: variable was not recorded with requires_grad");
    if (!backward_done_) throw Error("tape: grad requested before backward");
    return n.grad;
}

double finite_diff_check(const std::function<double(const Tensor&)>& f,
                         const Tensor& x,
                         const Tensor& analytic_grad,
                         double h) {
    if (!x.same_shape(analytic_grad)) throw Error("finite_diff_check: shape mismatch");
    if (!(h > 0.0)) throw Error("finite_diff_check: step must be positive");
    double worst = 0.0;
    Tensor probe = x;
    for (size_t i = 0; i < x.size(); ++i) {
        double orig = probe.data()[i];
        probe.data()[i] = orig + h;
        double fp = f(probe);
        probe.data()[i] = orig - h;
        double fm = f(probe);
        probe.data()[i] = orig;
        double central = (fp - fm) / (2.0 * h);
        double a = analytic_grad.data()[i];
        double err = std::abs(a - central) / (std::abs(a) + std::abs(central) + 1e-12);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace pl
