#pragma once

#include <cstdint>
#include <vector>

#include "purelearn/rng.hpp"
#include "purelearn/tensor.hpp"

namespace pl {

// Exact empirical W1 on the line between equal-size uniform samples:
// mean |sort(a)_i - sort(b)_i|.
double w1_exact_1d(std::vector<double> a, std::vector<double> b);

// Exact empirical W1 in any dimension via optimal assignment:
// min over permutations of mean Euclidean pair distance. Cubic solver,
// capped at 512 points.
double w1_exact_assignment(const Tensor& a, const Tensor& b);

// Dispatches to the 1-D sort oracle or the assignment solver.
double w1_exact(const Tensor& a, const Tensor& b);

// Minimum-cost perfect matching of a square cost matrix by shortest
// augmenting paths with potentials; returns the column matched to each row.
std::vector<size_t> min_cost_assignment(const Tensor& cost);

// k uniform-with-replacement row draws, for padding unequal-size clouds to a
// common size before calling an exact oracle.
Tensor resample_rows(const Tensor& points, size_t k, Rng& rng);

// Scalar piecewise-linear function on the line: slopes[i] applies between
// breakpoints[i-1] and breakpoints[i] (unbounded at the ends), anchored by
// the value at x = 0. Its Lipschitz constant is exactly max |slope|.
struct PiecewiseLinear {
    std::vector<double> breakpoints;  // strictly ascending
    std::vector<double> slopes;       // breakpoints.size() + 1 entries
    double value_at_zero = 0.0;

    double operator()(double x) const;
    double lipschitz() const;
};

// Draws a random piecewise-linear function with at most max_breaks kinks in
// [-span, span] and slopes within [-max_slope, max_slope].
PiecewiseLinear random_piecewise_linear(Rng& rng, size_t max_breaks = 5, double span = 6.0,
                                        double max_slope = 3.0);

// One evaluation of the discrepancy-transfer bound between two empirical
// distributions: lhs = mean |h1 - h2| over r1, rhs = the same over r2 plus
// 2 K W1(r1, r2) with K the pair's exact common Lipschitz bound.
struct TheoremCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double wd = 0.0;
    bool holds = false;
};

TheoremCheck theorem1_check(const PiecewiseLinear& h1, const PiecewiseLinear& h2,
                            const std::vector<double>& r1, const std::vector<double>& r2);

// The classifier-error form of the same bound: gamma(f) = mean |f - f_star|
// plays the role of the discrepancy, bounding the error transfer from r2
// to r1.
TheoremCheck error_bound_check(const PiecewiseLinear& f_c, const PiecewiseLinear& f_star,
                               const std::vector<double>& r1, const std::vector<double>& r2);

struct TrialStats {
    size_t trials = 0;
    size_t violations = 0;
    double max_gap = 0.0;  // max over trials of lhs - rhs (negative when safe)
};

// Randomized harnesses: random function pairs and random 1-D clouds, exact
// W1, violation counted when lhs > rhs + 1e-9.
TrialStats theorem1_trials(size_t trials, uint64_t seed);
TrialStats error_bound_trials(size_t trials, uint64_t seed);

struct CriticEstimateConfig {
    size_t steps = 600;  // full-batch Adam ascent steps
    size_t checkpoint_every = 50;
    double lr = 0.001;
    double clip = 0.1;
    std::vector<size_t> hidden = {512, 256, 10};
    uint64_t seed = 0;
    // Points are affine-normalized so every coordinate lies within this
    // extent before training; the clipped critic's first-layer kinks can
    // then cover the data span. The returned estimate is rescaled back.
    double normalized_extent = 0.6;
};

// Adversarial W1 estimate: trains a fresh weight-clipped critic to separate
// the two fixed clouds, and converts its objective into a certified lower
// bound by dividing out the largest per-pair difference quotient along the
// optimal matching. Never exceeds the exact W1 (up to float round-off).
double critic_w1_estimate(const Tensor& a, const Tensor& b,
                          const CriticEstimateConfig& cfg = {});

}  // namespace pl
