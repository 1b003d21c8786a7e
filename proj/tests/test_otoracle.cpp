#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "purelearn/errors.hpp"
#include "purelearn/otoracle.hpp"
#include "purelearn/rng.hpp"

using pl::Tensor;

namespace {

Tensor random_cloud(pl::Rng& rng, size_t k, size_t d, double mu = 0.0, double sigma = 1.0) {
    Tensor t(k, d);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(mu, sigma);
    return t;
}

double row_dist(const Tensor& a, size_t i, const Tensor& b, size_t j) {
    double s = 0.0;
    for (size_t k = 0; k < a.cols(); ++k) {
        double d = a.at(i, k) - b.at(j, k);
        s += d * d;
    }
    return std::sqrt(s);
}

// Exhaustive minimum over all permutations; only usable for tiny k.
double w1_brute_force(const Tensor& a, const Tensor& b) {
    std::vector<size_t> perm(a.rows());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (size_t i = 0; i < a.rows(); ++i) total += row_dist(a, i, b, perm[i]);
        best = std::min(best, total / static_cast<double>(a.rows()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("w1 fixtures on the line") {
    CHECK(pl::w1_exact_1d({0.0}, {1.0}) == doctest::Approx(1.0));
    CHECK(pl::w1_exact_1d({0.0, 1.0}, {1.0, 2.0}) == doctest::Approx(1.0));
    CHECK(pl::w1_exact_1d({1.0, 0.0}, {2.0, 1.0}) == doctest::Approx(1.0));
    CHECK(pl::w1_exact_1d({0.0, 0.0}, {0.0, 0.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(pl::w1_exact_1d({0.0}, {1.0, 2.0}), pl::Error);
}

TEST_CASE("w1 fixture in the plane") {
    Tensor a = Tensor::from(1, 2, {0.0, 0.0});
    Tensor b = Tensor::from(1, 2, {3.0, 4.0});
    CHECK(pl::w1_exact(a, b) == doctest::Approx(5.0));
}

TEST_CASE("assignment solver matches brute force at k = 8") {
    pl::Rng rng(1234);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor a = random_cloud(rng, 8, 3);
        Tensor b = random_cloud(rng, 8, 3, 0.5);
        CHECK(pl::w1_exact_assignment(a, b) ==
              doctest::Approx(w1_brute_force(a, b)).epsilon(1e-10));
    }
}

TEST_CASE("assignment solver agrees with the 1-d sort oracle") {
    pl::Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        size_t k = 2 + rng.next_u64(30);
        std::vector<double> av(k), bv(k);
        Tensor at(k, 1), bt(k, 1);
        for (size_t i = 0; i < k; ++i) {
            av[i] = rng.normal();
            bv[i] = rng.normal(1.0, 2.0);
            at[i] = av[i];
            bt[i] = bv[i];
        }
        CHECK(pl::w1_exact_assignment(at, bt) ==
              doctest::Approx(pl::w1_exact_1d(av, bv)).epsilon(1e-10));
    }
}

TEST_CASE("w1 behaves like a metric on equal-size clouds") {
    pl::Rng rng(31);
    Tensor a = random_cloud(rng, 12, 2);
    Tensor b = random_cloud(rng, 12, 2, 1.0);
    Tensor c = random_cloud(rng, 12, 2, -0.5, 1.5);
    double ab = pl::w1_exact(a, b);
    double ba = pl::w1_exact(b, a);
    double ac = pl::w1_exact(a, c);
    double cb = pl::w1_exact(c, b);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(pl::w1_exact(a, a) == doctest::Approx(0.0));
    CHECK(ab > 0.0);
    CHECK(ab <= ac + cb + 1e-12);
}

TEST_CASE("min cost assignment solves a known 3x3 instance") {
    // Row minima conflict, forcing the solver off the greedy choice.
    Tensor cost = Tensor::from(3, 3, {4, 1, 3, 2, 0, 5, 3, 2, 2});
    std::vector<size_t> match = pl::min_cost_assignment(cost);
    double total = 0.0;
    for (size_t i = 0; i < 3; ++i) total += cost.at(i, match[i]);
    CHECK(total == doctest::Approx(5.0));  // 1 + 2 + 2
}

TEST_CASE("resample keeps rows from the source cloud") {
    pl::Rng rng(8);
    Tensor pts = Tensor::from(3, 1, {10.0, 20.0, 30.0});
    Tensor out = pl::resample_rows(pts, 7, rng);
    CHECK(out.rows() == 7);
    for (size_t i = 0; i < 7; ++i) {
        bool found = false;
        for (size_t j = 0; j < 3; ++j)
            if (out[i] == pts[j]) found = true;
        CHECK(found);
    }
}

TEST_CASE("piecewise linear evaluation matches closed forms") {
    // f(x) = |x|: slope -1 below 0, +1 above, f(0) = 0.
    pl::PiecewiseLinear absf{{0.0}, {-1.0, 1.0}, 0.0};
    CHECK(absf(3.0) == doctest::Approx(3.0));
    CHECK(absf(-2.5) == doctest::Approx(2.5));
    CHECK(absf.lipschitz() == doctest::Approx(1.0));

    // Slope 2 until x=1, then slope -0.5, anchored f(0) = 1.
    pl::PiecewiseLinear f{{1.0}, {2.0, -0.5}, 1.0};
    CHECK(f(0.0) == doctest::Approx(1.0));
    CHECK(f(1.0) == doctest::Approx(3.0));
    CHECK(f(3.0) == doctest::Approx(2.0));
    CHECK(f(-2.0) == doctest::Approx(-3.0));
    CHECK(f.lipschitz() == doctest::Approx(2.0));
}

TEST_CASE("piecewise linear validation") {
    pl::PiecewiseLinear bad{{1.0, 1.0}, {0.0, 0.0, 0.0}, 0.0};
    CHECK_THROWS_AS(bad(0.5), pl::Error);
    pl::PiecewiseLinear wrong_count{{1.0}, {0.0}, 0.0};
    CHECK_THROWS_AS(wrong_count(0.5), pl::Error);
}

TEST_CASE("random piecewise linear functions respect their declared bounds") {
    pl::Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        pl::PiecewiseLinear f = pl::random_piecewise_linear(rng);
        CHECK(f.lipschitz() <= 3.0 + 1e-12);
        CHECK(std::is_sorted(f.breakpoints.begin(), f.breakpoints.end()));
        for (double b : f.breakpoints) CHECK(std::abs(b) <= 6.0);
    }
}

TEST_CASE("transfer bound holds on hand-built cases") {
    pl::PiecewiseLinear h1{{0.0}, {-1.0, 1.0}, 0.0};   // |x|
    pl::PiecewiseLinear h2{{}, {0.0}, 0.5};            // constant 0.5
    std::vector<double> r1 = {-1.0, 0.0, 1.0};
    std::vector<double> r2 = {-2.0, 0.0, 2.0};
    pl::TheoremCheck check = pl::theorem1_check(h1, h2, r1, r2);
    // lhs = mean(|1-0.5|, |0-0.5|, |1-0.5|) = 0.5
    CHECK(check.lhs == doctest::Approx(0.5));
    // mean over r2 is 7/6; W1 = mean(1,0,1) = 2/3; K = 1.
    CHECK(check.wd == doctest::Approx(2.0 / 3.0));
    CHECK(check.rhs == doctest::Approx(7.0 / 6.0 + 2.0 * 2.0 / 3.0));
    CHECK(check.holds);
}

TEST_CASE("randomized transfer bound trials never violate") {
    pl::TrialStats t1 = pl::theorem1_trials(200, 11);
    CHECK(t1.trials == 200);
    CHECK(t1.violations == 0);
    CHECK(t1.max_gap <= 1e-9);
    pl::TrialStats eb = pl::error_bound_trials(100, 12);
    CHECK(eb.violations == 0);
}

TEST_CASE("identical clouds give a zero critic estimate") {
    pl::Rng rng(2);
    Tensor a = random_cloud(rng, 32, 2);
    pl::CriticEstimateConfig cfg;
    cfg.steps = 100;
    CHECK(pl::critic_w1_estimate(a, a, cfg) == doctest::Approx(0.0));
}

TEST_CASE("critic estimate is a lower bound that detects separation") {
    pl::Rng rng(3);
    Tensor a = random_cloud(rng, 48, 1, 0.0);
    Tensor b = random_cloud(rng, 48, 1, 3.0);
    pl::CriticEstimateConfig cfg;
    cfg.steps = 300;
    double est = pl::critic_w1_estimate(a, b, cfg);
    double exact = pl::w1_exact(a, b);
    CHECK(est > 0.0);
    CHECK(est <= exact + 1e-9);
    CHECK(est >= 0.5 * exact);
}
