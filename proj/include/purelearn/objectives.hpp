#pragma once

#include <functional>
#include <vector>

#include "purelearn/autodiff.hpp"
#include "purelearn/tensor.hpp"

namespace pl {

// A scalar objective recorded on a tape, with a plain snapshot for logging.
struct LossValue {
    Var var;
    double snapshot = 0.0;
};

// Mean-reduced cross entropy over stabilized log-softmax of the logits.
LossValue cross_entropy_loss(Tape& tape, Var logits, const std::vector<uint16_t>& labels);

// mean(scores_a) - mean(scores_b). The critic trainer ascends this; swap the
// arguments to flip the ascent direction.
LossValue critic_objective(Tape& tape, Var scores_a, Var scores_b);

// Negative mean critic score over the target-task batch; descending this in
// the extractor pushes target representations toward high critic scores.
LossValue wasserstein_loss(Tape& tape, Var scores_c);

// lambda1 * classification + lambda2 * wasserstein. Weights must be >= 0.
LossValue combined_loss(Tape& tape, LossValue cls, LossValue w, double lambda1, double lambda2);

// Mean absolute disagreement of two scalar functions over an empirical sample
// of representations (one row each).
double epsilon_discrepancy(const std::function<double(const Tensor&)>& h1,
                           const std::function<double(const Tensor&)>& h2,
                           const Tensor& samples);

}  // namespace pl
