#include <cmath>

#include "doctest.h"
#include "purelearn/errors.hpp"
#include "purelearn/optim.hpp"
#include "purelearn/tensor.hpp"

using pl::Tensor;

TEST_CASE("sgd momentum accumulates velocity") {
    Tensor theta = Tensor::from(1, 1, {1.0});
    Tensor g = Tensor::from(1, 1, {1.0});
    pl::SgdMomentum opt(0.001, 0.9);
    opt.step({&theta}, {&g});
    CHECK(theta[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-12));
    opt.step({&theta}, {&g});
    // v = 0.9*1 + 1 = 1.9, so the second move is -0.0019.
    CHECK(theta[0] == doctest::Approx(1.0 - 0.001 - 0.0019).epsilon(1e-12));
}

TEST_CASE("sgd with zero momentum is plain gradient descent") {
    Tensor theta = Tensor::from(1, 2, {0.0, 0.0});
    Tensor g = Tensor::from(1, 2, {2.0, -4.0});
    pl::SgdMomentum opt(0.5, 0.0);
    opt.step({&theta}, {&g});
    CHECK(theta[0] == doctest::Approx(-1.0));
    CHECK(theta[1] == doctest::Approx(2.0));
}

TEST_CASE("adam first step matches the bias-corrected closed form") {
    Tensor theta = Tensor::from(1, 1, {1.0});
    Tensor g = Tensor::from(1, 1, {0.5});
    pl::Adam opt(0.001);
    opt.step({&theta}, {&g});
    // mhat = g, vhat = g*g, so the move is -lr * g / (|g| + eps).
    double expected = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
    CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("adam ascend flips the update direction") {
    Tensor up = Tensor::from(1, 1, {0.0});
    Tensor down = Tensor::from(1, 1, {0.0});
    Tensor g = Tensor::from(1, 1, {0.5});
    pl::Adam asc(0.001, true);
    pl::Adam desc(0.001, false);
    asc.step({&up}, {&g});
    desc.step({&down}, {&g});
    CHECK(up[0] > 0.0);
    CHECK(down[0] < 0.0);
    CHECK(up[0] == doctest::Approx(-down[0]).epsilon(1e-15));
}

TEST_CASE("adam step size stays near lr under a constant gradient") {
    Tensor theta = Tensor::from(1, 1, {0.0});
    Tensor g = Tensor::from(1, 1, {7.0});
    pl::Adam opt(0.001);
    double prev = 0.0;
    for (int i = 0; i < 10; ++i) {
        opt.step({&theta}, {&g});
        double move = prev - theta[0];
        CHECK(move == doctest::Approx(0.001).epsilon(1e-4));
        prev = theta[0];
    }
}

TEST_CASE("step schedule decays by whole epochs") {
    pl::StepLr sched(0.001, 7, 0.1);
    CHECK(sched.at_epoch(0) == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(sched.at_epoch(6) == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(sched.at_epoch(7) == doctest::Approx(0.0001).epsilon(1e-12));
    CHECK(sched.at_epoch(13) == doctest::Approx(0.0001).epsilon(1e-12));
    CHECK(sched.at_epoch(14) == doctest::Approx(0.00001).epsilon(1e-12));
}

TEST_CASE("optimizer constructors validate their inputs") {
    CHECK_THROWS_AS(pl::SgdMomentum(-0.1, 0.9), pl::ConfigError);
    CHECK_THROWS_AS(pl::SgdMomentum(0.1, 1.0), pl::ConfigError);
    CHECK_THROWS_AS(pl::Adam(0.1, false, 1.0, 0.999), pl::ConfigError);
    CHECK_THROWS_AS(pl::Adam(0.1, false, 0.9, 0.999, 0.0), pl::ConfigError);
    CHECK_THROWS_AS(pl::StepLr(0.001, 0, 0.1), pl::ConfigError);
}

TEST_CASE("optimizers reject a changed parameter list") {
    Tensor a = Tensor::from(1, 1, {0.0});
    Tensor b = Tensor::from(1, 1, {0.0});
    Tensor g = Tensor::from(1, 1, {1.0});
    pl::SgdMomentum opt(0.1, 0.9);
    opt.step({&a}, {&g});
    CHECK_THROWS_AS(opt.step({&a, &b}, {&g, &g}), pl::Error);
    pl::Adam adam(0.1);
    adam.step({&a}, {&g});
    Tensor wide = Tensor::from(1, 2, {1.0, 1.0});
    CHECK_THROWS_AS(adam.step({&wide}, {&wide}), pl::Error);
}
