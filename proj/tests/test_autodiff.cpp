#include <cmath>
#include <vector>

#include "doctest.h"
#include "purelearn/autodiff.hpp"
#include "purelearn/errors.hpp"
#include "purelearn/nn.hpp"
#include "purelearn/objectives.hpp"
#include "purelearn/rng.hpp"
#include "purelearn/tensor.hpp"

using pl::Tape;
using pl::Tensor;
using pl::Var;

TEST_CASE("d(x*x)/dx at 3 is 6") {
    Tape t;
    Var x = t.input(Tensor::from(1, 1, {3.0}), true);
    Var y = t.matmul(x, x);
    t.backward(y);
    CHECK(t.grad(x)[0] == doctest::Approx(6.0));
}

TEST_CASE("cubic matches central differences tightly") {
    Tensor x0 = Tensor::from(1, 1, {1.0});
    auto f = [](const Tensor& x) { return x[0] * x[0] * x[0]; };
    Tape t;
    Var x = t.input(x0, true);
    Var y = t.matmul(t.matmul(x, x), x);
    t.backward(y);
    CHECK(t.value(y)[0] == doctest::Approx(1.0));
    CHECK(t.grad(x)[0] == doctest::Approx(3.0));
    // f'' is non-constant, so the h^2 truncation term is visible but tiny.
    CHECK(pl::finite_diff_check(f, x0, t.grad(x), 1e-5) < 1e-8);
}

TEST_CASE("linear map gradients are exact to rounding") {
    pl::Rng rng(11);
    Tensor w(3, 4);
    for (size_t i = 0; i < w.size(); ++i) w[i] = rng.normal();
    Tensor b(1, 3);
    for (size_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
    Tensor x0(2, 4);
    for (size_t i = 0; i < x0.size(); ++i) x0[i] = rng.normal();

    auto f = [&](const Tensor& x) {
        Tensor out = pl::add_rowvec(pl::matmul_nt(x, w), b);
        return pl::mean(out);
    };
    Tape t;
    Var x = t.input(x0, true);
    Var wv = t.input(w, false);
    Var bv = t.input(b, false);
    Var y = t.mean_all(t.linear(x, wv, bv));
    t.backward(y);
    CHECK(pl::finite_diff_check(f, x0, t.grad(x), 1e-6) < 1e-9);
}

TEST_CASE("relu subgradient at exact zero is zero") {
    Tape t;
    Var x = t.input(Tensor::from(1, 3, {-2.0, 0.0, 2.0}), true);
    Var y = t.mean_all(t.relu(x));
    t.backward(y);
    const Tensor& g = t.grad(x);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(g[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("log softmax of a constant row is -ln(k)") {
    Tape t;
    Var x = t.input(Tensor::from(1, 3, {0.0, 0.0, 0.0}), false);
    Var y = t.log_softmax_rows(x);
    for (size_t i = 0; i < 3; ++i)
        CHECK(t.value(y)[i] == doctest::Approx(-std::log(3.0)));
}

TEST_CASE("log softmax survives huge logits via max shift") {
    Tape t;
    Var x = t.input(Tensor::from(1, 2, {1000.0, 0.0}), false);
    Var y = t.log_softmax_rows(x);
    CHECK(std::isfinite(t.value(y)[0]));
    CHECK(t.value(y)[0] == doctest::Approx(0.0));
    CHECK(t.value(y)[1] == doctest::Approx(-1000.0));
}

TEST_CASE("cross entropy with a confident correct logit is near zero") {
    Tape t;
    Var logits = t.input(Tensor::from(1, 2, {1000.0, 0.0}), false);
    pl::LossValue loss = pl::cross_entropy_loss(t, logits, {0});
    CHECK(loss.snapshot == doctest::Approx(0.0));
}

TEST_CASE("nll_mean picks labeled entries") {
    Tape t;
    Tensor logp = Tensor::from(2, 2, {std::log(0.25), std::log(0.75),
                                      std::log(0.5), std::log(0.5)});
    Var lp = t.input(logp, false);
    Var y = t.nll_mean(lp, {1, 0});
    CHECK(t.value(y)[0] == doctest::Approx(-(std::log(0.75) + std::log(0.5)) / 2.0));
    Tape t2;
    Var lp2 = t2.input(logp, false);
    CHECK_THROWS_AS(t2.nll_mean(lp2, {2, 0}), pl::Error);
}

TEST_CASE("two layer relu network with cross entropy passes gradient checks") {
    pl::Rng rng(5);
    pl::Mlp mlp = pl::init_mlp(4, {8, 3}, rng);
    Tensor x(5, 4);
    for (size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    // Nudge off any relu kink so central differences are valid.
    std::vector<uint16_t> labels = {0, 2, 1, 1, 0};

    Tape t;
    Var xv = t.input(x, false);
    pl::TapedMlp staged = pl::stage_mlp(t, mlp, true);
    Var logits = pl::forward_mlp(t, staged, xv);
    pl::LossValue loss = pl::cross_entropy_loss(t, logits, labels);
    t.backward(loss.var);

    for (size_t layer = 0; layer < mlp.layers.size(); ++layer) {
        auto f = [&, layer](const Tensor& w) {
            pl::Mlp probe = mlp;
            probe.layers[layer].W = w;
            Tensor out = pl::forward_mlp(probe, x);
            Tape inner;
            Var lg = inner.input(out, false);
            return pl::cross_entropy_loss(inner, lg, labels).snapshot;
        };
        double err = pl::finite_diff_check(f, mlp.layers[layer].W,
                                           t.grad(staged.weights[layer]), 1e-5);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("tape guards its lifecycle") {
    Tape t;
    Var x = t.input(Tensor::from(1, 2, {1.0, 2.0}), true);
    SUBCASE("backward requires a scalar root") {
        CHECK_THROWS_AS(t.backward(x), pl::Error);
    }
    SUBCASE("grad before backward throws") {
        CHECK_THROWS_AS(t.grad(x), pl::Error);
    }
    SUBCASE("backward twice throws, record after backward throws") {
        Var y = t.mean_all(x);
        t.backward(y);
        CHECK_THROWS_AS(t.backward(y), pl::Error);
        CHECK_THROWS_AS(t.relu(x), pl::Error);
    }
}

TEST_CASE("non-finite intermediate values are a hard error") {
    Tape t;
    Var x = t.input(Tensor::from(1, 1, {1e200}), true);
    CHECK_THROWS_AS(t.matmul(x, x), pl::NumericalError);
}
