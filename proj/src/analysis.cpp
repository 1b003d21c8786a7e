#include "purelearn/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "purelearn/errors.hpp"

namespace pl {

std::vector<uint16_t> predict_classes(const Mlp& extractor, const Mlp& classifier,
                                      const Dataset& ds) {
    if (!ds.has_task_label) throw Error("evaluation needs task labels");
    if (ds.size() == 0) throw Error("evaluation on empty dataset");
    if (ds.feat_dim != extractor.in_dim())
        throw Error("feature dim " + std::to_string(ds.feat_dim) + " does not match extractor input " +
                    std::to_string(extractor.in_dim()));
    Tensor logits = forward_mlp(classifier, forward_mlp(extractor, dataset_features(ds)));
    std::vector<uint16_t> pred(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        size_t best = 0;
        for (size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(i, c) > logits.at(i, best)) best = c;
        pred[i] = static_cast<uint16_t>(best);
    }
    return pred;
}

double evaluate_accuracy(const Mlp& extractor, const Mlp& classifier, const Dataset& ds) {
    std::vector<uint16_t> pred = predict_classes(extractor, classifier, ds);
    size_t hits = 0;
    for (size_t i = 0; i < ds.size(); ++i)
        if (pred[i] == ds.y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::vector<double> symmetric_eigenvalues(Tensor a) {
    if (a.rows() != a.cols()) throw Error("eigensolver needs a square matrix");
    const size_t n = a.rows();
    if (n == 0) throw Error("eigensolver on empty matrix");
    for (size_t r = 0; r < n; ++r)
        for (size_t c = r + 1; c < n; ++c)
            if (std::abs(a.at(r, c) - a.at(c, r)) > 1e-9 * (1.0 + std::abs(a.at(r, c))))
                throw Error("eigensolver needs a symmetric matrix");

    double frob = 0.0;
    for (size_t i = 0; i < a.size(); ++i) frob += a.data()[i] * a.data()[i];
    const double tol = 1e-24 * std::max(frob, 1e-300);

    constexpr size_t kMaxSweeps = 100;
    for (size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (size_t r = 0; r < n; ++r)
            for (size_t c = r + 1; c < n; ++c) off += 2.0 * a.at(r, c) * a.at(r, c);
        if (off < tol) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (apq == 0.0) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p);
                    double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k);
                    double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (size_t i = 0; i < n; ++i) eig[i] = a.at(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

PcaReport pca_explained_variance(const Tensor& reps, size_t top_k) {
    if (reps.rows() < 2) throw Error("pca needs at least 2 rows");
    const size_t k = reps.rows();
    const size_t d = reps.cols();

    Tensor centered = reps;
    for (size_t c = 0; c < d; ++c) {
        double mu = 0.0;
        for (size_t r = 0; r < k; ++r) mu += reps.at(r, c);
        mu /= static_cast<double>(k);
        for (size_t r = 0; r < k; ++r) centered.at(r, c) -= mu;
    }
    Tensor cov = scale(matmul_tn(centered, centered), 1.0 / static_cast<double>(k - 1));

    PcaReport report;
    report.eigenvalues = symmetric_eigenvalues(cov);
    report.top_k = std::min(top_k, d);
    double total = 0.0;
    for (double& ev : report.eigenvalues) {
        // Clamp the tiny negative values Jacobi round-off can leave on a PSD
        // spectrum.
        if (ev < 0.0 && ev > -1e-9 * std::abs(report.eigenvalues.front())) ev = 0.0;
        total += ev;
    }
    if (!(total > 1e-18)) {
        report.degenerate = true;
        report.top_k_cumulative = 0.0;
        return report;
    }
    double run = 0.0;
    for (double ev : report.eigenvalues) {
        double p = ev / total;
        run += p;
        report.proportions.push_back(p);
        report.cumulative.push_back(run);
    }
    report.top_k_cumulative = report.top_k == 0 ? 0.0 : report.cumulative[report.top_k - 1];
    return report;
}

std::pair<double, double> purity_comparison(const ModelParams& model_a,
                                            const ModelParams& model_b, const Dataset& eval_set,
                                            size_t top_k) {
    Tensor x = dataset_features(eval_set);
    PcaReport ra = pca_explained_variance(forward_mlp(model_a.extractor, x), top_k);
    PcaReport rb = pca_explained_variance(forward_mlp(model_b.extractor, x), top_k);
    return {ra.top_k_cumulative, rb.top_k_cumulative};
}

}  // namespace pl
