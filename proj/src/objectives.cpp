#include "purelearn/objectives.hpp"

#include <cmath>

#include "purelearn/errors.hpp"

namespace pl {

namespace {

LossValue as_loss(Tape& tape, Var v) {
    const Tensor& t = tape.value(v);
    if (t.rows() != 1 || t.cols() != 1) throw Error("loss must be a 1x1 scalar");
    return LossValue{v, t.at(0, 0)};
}

void require_scores(const Tape& tape, Var scores, const char* what) {
    const Tensor& t = tape.value(scores);
    if (t.cols() != 1) throw Error(std::string(what) + ": scores must be m x 1");
    if (t.rows() == 0) throw Error(std::string(what) + ": empty batch");
}

}  // namespace

LossValue cross_entropy_loss(Tape& tape, Var logits, const std::vector<uint16_t>& labels) {
    Var logp = tape.log_softmax_rows(logits);
    return as_loss(tape, tape.nll_mean(logp, labels));
}

LossValue critic_objective(Tape& tape, Var scores_a, Var scores_b) {
    require_scores(tape, scores_a, "critic_objective");
    require_scores(tape, scores_b, "critic_objective");
    if (tape.value(scores_a).rows() != tape.value(scores_b).rows())
        throw Error("critic_objective: batch sizes differ");
    return as_loss(tape, tape.sub(tape.mean_all(scores_a), tape.mean_all(scores_b)));
}

LossValue wasserstein_loss(Tape& tape, Var scores_c) {
    require_scores(tape, scores_c, "wasserstein_loss");
    return as_loss(tape, tape.scale(tape.mean_all(scores_c), -1.0));
}

LossValue combined_loss(Tape& tape, LossValue cls, LossValue w, double lambda1, double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be non-negative");
    Var v = tape.add(tape.scale(cls.var, lambda1), tape.scale(w.var, lambda2));
    return as_loss(tape, v);
}

double epsilon_discrepancy(const std::function<double(const Tensor&)>& h1,
                           const std::function<double(const Tensor&)>& h2,
                           const Tensor& samples) {
    if (samples.rows() == 0) throw Error("epsilon_discrepancy: empty sample set");
    double acc = 0.0;
    for (size_t r = 0; r < samples.rows(); ++r) {
        Tensor row(1, samples.cols());
        for (size_t c = 0; c < samples.cols(); ++c) row.at(0, c) = samples.at(r, c);
        double d = std::abs(h1(row) - h2(row));
        if (!std::isfinite(d)) throw NumericalError("non-finite discrepancy sample");
        acc += d;
    }
    return acc / static_cast<double>(samples.rows());
}

}  // namespace pl
