#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "purelearn/data.hpp"
#include "purelearn/nn.hpp"
#include "purelearn/tensor.hpp"

namespace pl {

// Explained-variance decomposition of a representation cloud. proportions
// and cumulative are empty when the cloud is degenerate (zero variance).
struct PcaReport {
    std::vector<double> eigenvalues;  // descending
    std::vector<double> proportions;  // eigenvalue / total variance
    std::vector<double> cumulative;   // running sum of proportions
    size_t top_k = 0;
    double top_k_cumulative = 0.0;
    bool degenerate = false;
};

// Fraction of samples whose argmax logit equals the task label. Ties pick
// the lowest class index so evaluation is deterministic.
double evaluate_accuracy(const Mlp& extractor, const Mlp& classifier, const Dataset& ds);

// Argmax class per row with the same lowest-index tie rule.
std::vector<uint16_t> predict_classes(const Mlp& extractor, const Mlp& classifier,
                                      const Dataset& ds);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
std::vector<double> symmetric_eigenvalues(Tensor a);

// Sample covariance (1/(k-1), mean-centered) of the rep rows, then its
// spectrum. Requires k >= 2 rows.
PcaReport pca_explained_variance(const Tensor& reps, size_t top_k);

// Top-k cumulative explained-variance proportion of each model's
// representations over the same evaluation set.
std::pair<double, double> purity_comparison(const ModelParams& model_a,
                                            const ModelParams& model_b, const Dataset& eval_set,
                                            size_t top_k = 2);

}  // namespace pl
