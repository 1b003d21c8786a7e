#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "purelearn/data.hpp"
#include "purelearn/nn.hpp"
#include "purelearn/optim.hpp"
#include "purelearn/rng.hpp"

namespace pl {

// Which score-mean difference the critic ascends: batch A minus batch B, or
// the reverse. Both orientations appear in the literature this loop follows;
// a_minus_b is the default.
enum class CriticSign { a_minus_b, b_minus_a };

struct TrainConfig {
    double critic_lr = 0.001;  // Adam, constant
    double model_lr = 0.001;   // SGD, stepped by the epoch schedule
    double momentum = 0.9;
    size_t batch_size = 64;  // m, shared by batches A, B and C
    // Critic iterations per epoch. Unset: ceil(|S_tgt| / m). Zero: the critic
    // is never updated (and batches A/B are never drawn) but the outer loop
    // still runs at the automatic count so classification training proceeds.
    std::optional<size_t> n_outer;
    size_t n_inner = 3;  // classification+suppression steps per critic step
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double clip = 0.1;  // critic weight limit
    size_t epochs = 50;
    uint64_t seed = 42;
    // Nuisance class defining batch A. Unset: most frequent class in S_src.
    std::optional<uint16_t> fixed_nuisance;
    std::vector<size_t> extractor_hidden;  // relu widths before the rep layer
    size_t rep_dim = 128;
    std::vector<size_t> critic_hidden = {512, 256, 10};
    CriticSign critic_sign = CriticSign::a_minus_b;
    size_t lr_step = 7;  // epochs per decay step
    double lr_gamma = 0.1;
    double heldout_fraction = 0.1;  // of S_tgt, carved before training
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct EpochMetrics {
    size_t epoch = 0;
    std::string split;  // "train" or "heldout"
    double loss_cls = 0.0;
    double loss_w = 0.0;
    double critic_obj = 0.0;  // mean critic objective across the epoch
    double accuracy = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    ModelParams final_params;
    ModelParams best_params;  // highest heldout accuracy; final if no heldout
    size_t best_epoch = 0;
    double best_heldout_accuracy = 0.0;
    std::vector<EpochMetrics> metrics;
};

struct TrainHooks {
    // Runs for every metrics row as it is recorded.
    std::function<void(const EpochMetrics& row)> on_metrics;
    // Runs after each epoch's metrics are recorded.
    std::function<void(size_t epoch, const ModelParams& params)> on_epoch_end;
};

// One Adam ascent step of the critic on mean(score_A) - mean(score_B)
// (orientation per sign), followed by weight clipping. The extractor is
// frozen: representations enter as plain values. Returns the objective.
double critic_update(ModelParams& params, const Tensor& batch_a, const Tensor& batch_b,
                     Adam& critic_opt, double clip, CriticSign sign);

// One shared forward pass, one SGD-momentum descent step on
// lambda1 * cross-entropy for both the extractor and the classifier.
// Returns the unweighted classification loss.
double goal1_update(ModelParams& params, const Batch& batch_c, double lambda1,
                    SgdMomentum& extractor_opt, SgdMomentum& classifier_opt);

// One SGD-momentum descent step of the extractor alone on
// lambda2 * (negative mean critic score of batch C); the critic is frozen.
// Returns the unweighted suppression loss.
double goal2_update(ModelParams& params, const Batch& batch_c, double lambda2,
                    SgdMomentum& extractor_opt);

// The full alternating loop: per epoch, n_outer iterations of one critic
// update followed by n_inner (goal-1, goal-2) pairs on fresh target batches.
// Heldout carve, batch draws and parameter init are all derived from
// cfg.seed, so runs are bit-reproducible.
TrainResult train_purified(const TrainConfig& cfg, const Dataset& target, const Dataset& source,
                           const TrainHooks& hooks = {});

// Classification-only baseline: the same loop with the critic and the
// suppression step disabled. Bit-identical to train_purified with
// lambda2 = 0 and n_outer = 0 under the same seed.
TrainResult train_goal1_only(const TrainConfig& cfg, const Dataset& target,
                             const TrainHooks& hooks = {});

// CSV with header epoch,split,loss_cls,loss_w,critic_obj,accuracy,lr.
void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);
std::vector<EpochMetrics> read_metrics_csv(const std::string& path);

}  // namespace pl
