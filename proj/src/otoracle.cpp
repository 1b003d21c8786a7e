#include "purelearn/otoracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "purelearn/errors.hpp"
#include "purelearn/nn.hpp"
#include "purelearn/objectives.hpp"
#include "purelearn/optim.hpp"

namespace pl {

double w1_exact_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("w1_exact_1d: empty sample");
    if (a.size() != b.size())
        throw Error("w1_exact_1d: sizes differ; resample to a common size first");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

std::vector<size_t> min_cost_assignment(const Tensor& cost) {
    if (cost.rows() != cost.cols()) throw Error("assignment needs a square cost matrix");
    const size_t n = cost.rows();
    if (n == 0) throw Error("assignment on empty matrix");
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // Shortest augmenting paths with dual potentials; p[j] is the row
    // currently matched to column j (0 = unmatched, rows are 1-based).
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<size_t> p(n + 1, 0), way(n + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        p[0] = i;
        size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            size_t i0 = p[j0], j1 = 0;
            double delta = kInf;
            for (size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<size_t> match(n);
    for (size_t j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
    return match;
}

namespace {

double row_distance(const Tensor& a, size_t i, const Tensor& b, size_t j) {
    double d2 = 0.0;
    for (size_t c = 0; c < a.cols(); ++c) {
        double diff = a.at(i, c) - b.at(j, c);
        d2 += diff * diff;
    }
    return std::sqrt(d2);
}

void check_cloud_pair(const Tensor& a, const Tensor& b) {
    if (a.rows() == 0 || b.rows() == 0) throw Error("empty point set");
    if (a.cols() != b.cols()) throw Error("point clouds have different dimensions");
    if (a.rows() != b.rows())
        throw Error("point clouds have different sizes; resample to a common size first");
}

// Optimal pairing between equal-size clouds: sorted order on the line,
// assignment solver otherwise.
std::vector<size_t> optimal_matching(const Tensor& a, const Tensor& b) {
    const size_t k = a.rows();
    if (a.cols() == 1) {
        std::vector<size_t> ia(k), ib(k);
        std::iota(ia.begin(), ia.end(), size_t{0});
        std::iota(ib.begin(), ib.end(), size_t{0});
        std::sort(ia.begin(), ia.end(),
                  [&](size_t x, size_t y) { return a.at(x, 0) < a.at(y, 0); });
        std::sort(ib.begin(), ib.end(),
                  [&](size_t x, size_t y) { return b.at(x, 0) < b.at(y, 0); });
        std::vector<size_t> match(k);
        for (size_t r = 0; r < k; ++r) match[ia[r]] = ib[r];
        return match;
    }
    if (k > 512) throw Error("assignment matching capped at 512 points");
    Tensor cost(k, k);
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j) cost.at(i, j) = row_distance(a, i, b, j);
    return min_cost_assignment(cost);
}

}  // namespace

double w1_exact_assignment(const Tensor& a, const Tensor& b) {
    check_cloud_pair(a, b);
    if (a.rows() > 512) throw Error("assignment matching capped at 512 points");
    Tensor cost(a.rows(), a.rows());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.rows(); ++j) cost.at(i, j) = row_distance(a, i, b, j);
    std::vector<size_t> match = min_cost_assignment(cost);
    double acc = 0.0;
    for (size_t i = 0; i < match.size(); ++i) acc += cost.at(i, match[i]);
    return acc / static_cast<double>(a.rows());
}

double w1_exact(const Tensor& a, const Tensor& b) {
    check_cloud_pair(a, b);
    if (a.cols() == 1) {
        std::vector<double> av(a.rows()), bv(b.rows());
        for (size_t i = 0; i < a.rows(); ++i) av[i] = a.at(i, 0);
        for (size_t i = 0; i < b.rows(); ++i) bv[i] = b.at(i, 0);
        return w1_exact_1d(std::move(av), std::move(bv));
    }
    return w1_exact_assignment(a, b);
}

Tensor resample_rows(const Tensor& points, size_t k, Rng& rng) {
    if (points.rows() == 0) throw Error("cannot resample an empty cloud");
    if (k == 0) throw Error("resample target size must be >= 1");
    Tensor out(k, points.cols());
    for (size_t i = 0; i < k; ++i) {
        size_t r = rng.next_u64(points.rows());
        for (size_t c = 0; c < points.cols(); ++c) out.at(i, c) = points.at(r, c);
    }
    return out;
}

namespace {

void validate_piecewise(const PiecewiseLinear& f) {
    if (f.slopes.size() != f.breakpoints.size() + 1)
        throw Error("piecewise-linear function needs breakpoints+1 slopes");
    for (size_t i = 1; i < f.breakpoints.size(); ++i)
        if (!(f.breakpoints[i - 1] < f.breakpoints[i]))
            throw Error("piecewise-linear breakpoints must be strictly ascending");
}

}  // namespace

double PiecewiseLinear::operator()(double x) const {
    validate_piecewise(*this);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const double lo = std::min(0.0, x);
    const double hi = std::max(0.0, x);
    double acc = 0.0;
    for (size_t j = 0; j < slopes.size(); ++j) {
        double seg_lo = j == 0 ? -kInf : breakpoints[j - 1];
        double seg_hi = j + 1 == slopes.size() ? kInf : breakpoints[j];
        double a = std::max(lo, seg_lo);
        double b = std::min(hi, seg_hi);
        if (b > a) acc += slopes[j] * (b - a);
    }
    return value_at_zero + (x >= 0.0 ? acc : -acc);
}

double PiecewiseLinear::lipschitz() const {
    validate_piecewise(*this);
    double k = 0.0;
    for (double s : slopes) k = std::max(k, std::abs(s));
    return k;
}

PiecewiseLinear random_piecewise_linear(Rng& rng, size_t max_breaks, double span,
                                        double max_slope) {
    PiecewiseLinear f;
    size_t breaks = rng.next_u64(max_breaks + 1);
    for (size_t i = 0; i < breaks; ++i) f.breakpoints.push_back(rng.uniform(-span, span));
    std::sort(f.breakpoints.begin(), f.breakpoints.end());
    f.breakpoints.erase(std::unique(f.breakpoints.begin(), f.breakpoints.end()),
                        f.breakpoints.end());
    for (size_t i = 0; i < f.breakpoints.size() + 1; ++i)
        f.slopes.push_back(rng.uniform(-max_slope, max_slope));
    f.value_at_zero = rng.uniform(-2.0, 2.0);
    return f;
}

namespace {

double mean_abs_gap(const PiecewiseLinear& h1, const PiecewiseLinear& h2,
                    const std::vector<double>& r) {
    if (r.empty()) throw Error("empty sample set");
    double acc = 0.0;
    for (double x : r) acc += std::abs(h1(x) - h2(x));
    return acc / static_cast<double>(r.size());
}

TheoremCheck transfer_bound_check(const PiecewiseLinear& h1, const PiecewiseLinear& h2,
                                  const std::vector<double>& r1,
                                  const std::vector<double>& r2) {
    TheoremCheck c;
    double k = std::max(h1.lipschitz(), h2.lipschitz());
    c.lhs = mean_abs_gap(h1, h2, r1);
    c.wd = w1_exact_1d(r1, r2);
    c.rhs = mean_abs_gap(h1, h2, r2) + 2.0 * k * c.wd;
    c.holds = c.lhs <= c.rhs + 1e-9;
    return c;
}

TrialStats transfer_bound_trials(size_t trials, uint64_t seed, const char* tag) {
    Rng root(seed);
    Rng rng = root.derive(tag);
    TrialStats stats;
    stats.trials = trials;
    stats.max_gap = -std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < trials; ++t) {
        size_t k = 8 + rng.next_u64(121);
        auto draw_cloud = [&](std::vector<double>& r) {
            double mu = rng.uniform(-3.0, 3.0);
            double sigma = rng.uniform(0.2, 2.0);
            r.resize(k);
            for (double& x : r) x = mu + sigma * rng.normal();
        };
        std::vector<double> r1, r2;
        draw_cloud(r1);
        draw_cloud(r2);
        PiecewiseLinear h1 = random_piecewise_linear(rng);
        PiecewiseLinear h2 = random_piecewise_linear(rng);
        TheoremCheck c = transfer_bound_check(h1, h2, r1, r2);
        if (!c.holds) ++stats.violations;
        stats.max_gap = std::max(stats.max_gap, c.lhs - c.rhs);
    }
    if (trials == 0) stats.max_gap = 0.0;
    return stats;
}

}  // namespace

TheoremCheck theorem1_check(const PiecewiseLinear& h1, const PiecewiseLinear& h2,
                            const std::vector<double>& r1, const std::vector<double>& r2) {
    return transfer_bound_check(h1, h2, r1, r2);
}

TheoremCheck error_bound_check(const PiecewiseLinear& f_c, const PiecewiseLinear& f_star,
                               const std::vector<double>& r1, const std::vector<double>& r2) {
    return transfer_bound_check(f_c, f_star, r1, r2);
}

TrialStats theorem1_trials(size_t trials, uint64_t seed) {
    return transfer_bound_trials(trials, seed, "theorem1-trials");
}

TrialStats error_bound_trials(size_t trials, uint64_t seed) {
    return transfer_bound_trials(trials, seed, "error-bound-trials");
}

double critic_w1_estimate(const Tensor& a, const Tensor& b, const CriticEstimateConfig& cfg) {
    check_cloud_pair(a, b);
    if (cfg.steps == 0) throw ConfigError("estimator needs at least one step");
    if (cfg.checkpoint_every == 0) throw ConfigError("checkpoint interval must be >= 1");
    if (!(cfg.clip > 0.0)) throw ConfigError("clip bound must be positive");
    if (!(cfg.normalized_extent > 0.0)) throw ConfigError("normalized extent must be positive");
    const size_t k = a.rows();
    const size_t d = a.cols();

    // Affine-normalize both clouds jointly: center each coordinate on its
    // hull midpoint, scale the largest deviation to normalized_extent. W1
    // scales by exactly the same factor, so the estimate converts back
    // losslessly, and the clipped critic's kinks can cover the data span.
    std::vector<double> center(d);
    double max_dev = 0.0;
    for (size_t c = 0; c < d; ++c) {
        double mn = std::numeric_limits<double>::infinity();
        double mx = -mn;
        for (size_t i = 0; i < k; ++i) {
            mn = std::min({mn, a.at(i, c), b.at(i, c)});
            mx = std::max({mx, a.at(i, c), b.at(i, c)});
        }
        center[c] = 0.5 * (mn + mx);
        max_dev = std::max(max_dev, 0.5 * (mx - mn));
    }
    if (max_dev <= 0.0) return 0.0;
    const double alpha = cfg.normalized_extent / max_dev;
    Tensor an(k, d), bn(k, d);
    for (size_t i = 0; i < k; ++i) {
        for (size_t c = 0; c < d; ++c) {
            an.at(i, c) = (a.at(i, c) - center[c]) * alpha;
            bn.at(i, c) = (b.at(i, c) - center[c]) * alpha;
        }
    }

    std::vector<size_t> match = optimal_matching(an, bn);
    std::vector<double> match_dist(k);
    for (size_t i = 0; i < k; ++i) match_dist[i] = row_distance(an, i, bn, match[i]);

    Rng root(cfg.seed);
    Rng init_rng = root.derive("estimator-critic");
    std::vector<size_t> widths = cfg.hidden;
    widths.push_back(1);
    Mlp critic = init_mlp(d, widths, init_rng);
    Adam opt(cfg.lr, true);

    // The objective mean f(A) - mean f(B) equals the mean matched score
    // difference, which is at most (max per-pair difference quotient) times
    // the optimal matching cost. Dividing by that quotient therefore gives
    // a certified lower bound on the normalized W1; the running max over
    // checkpoints keeps the estimate monotone in the training budget.
    double best = 0.0;
    for (size_t step = 1; step <= cfg.steps; ++step) {
        Tape tape;
        Var va = tape.input(an, false);
        Var vb = tape.input(bn, false);
        TapedMlp staged = stage_mlp(tape, critic, true);
        Var sa = forward_mlp(tape, staged, va);
        Var sb = forward_mlp(tape, staged, vb);
        LossValue obj = critic_objective(tape, sa, sb);
        tape.backward(obj.var);
        opt.step(critic, tape, staged);
        clip_weights(critic, cfg.clip);
        if (step % cfg.checkpoint_every != 0 && step != cfg.steps) continue;

        Tensor fa = forward_mlp(critic, an);
        Tensor fb = forward_mlp(critic, bn);
        double objective = mean(fa) - mean(fb);
        if (!(objective > 0.0)) continue;
        double quotient = 0.0;
        for (size_t i = 0; i < k; ++i) {
            if (match_dist[i] <= 0.0) continue;
            quotient = std::max(quotient,
                                std::abs(fa.at(i, 0) - fb.at(match[i], 0)) / match_dist[i]);
        }
        if (quotient > 0.0) best = std::max(best, objective / quotient);
    }
    return best / alpha;
}

}  // namespace pl
