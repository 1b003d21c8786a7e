#include "purelearn/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "purelearn/errors.hpp"
#include "purelearn/objectives.hpp"

namespace pl {

double critic_update(ModelParams& params, const Tensor& batch_a, const Tensor& batch_b,
                     Adam& critic_opt, double clip, CriticSign sign) {
    // The extractor is frozen here: representations enter the tape as plain
    // values, so no gradient can reach it.
    Tensor rep_a = forward_mlp(params.extractor, batch_a);
    Tensor rep_b = forward_mlp(params.extractor, batch_b);
    Tape tape;
    Var va = tape.input(rep_a, false);
    Var vb = tape.input(rep_b, false);
    TapedMlp critic = stage_mlp(tape, params.critic, true);
    Var sa = forward_mlp(tape, critic, va);
    Var sb = forward_mlp(tape, critic, vb);
    LossValue obj = sign == CriticSign::a_minus_b ? critic_objective(tape, sa, sb)
                                                  : critic_objective(tape, sb, sa);
    tape.backward(obj.var);
    critic_opt.step(params.critic, tape, critic);
    clip_weights(params.critic, clip);
    return obj.snapshot;
}

double goal1_update(ModelParams& params, const Batch& batch_c, double lambda1,
                    SgdMomentum& extractor_opt, SgdMomentum& classifier_opt) {
    if (lambda1 < 0.0) throw ConfigError("lambda1 must be >= 0");
    Tape tape;
    Var x = tape.input(batch_c.x, false);
    TapedMlp ext = stage_mlp(tape, params.extractor, true);
    TapedMlp cls = stage_mlp(tape, params.classifier, true);
    Var logits = forward_mlp(tape, cls, forward_mlp(tape, ext, x));
    LossValue ce = cross_entropy_loss(tape, logits, batch_c.labels);
    tape.backward(tape.scale(ce.var, lambda1));
    extractor_opt.step(params.extractor, tape, ext);
    classifier_opt.step(params.classifier, tape, cls);
    return ce.snapshot;
}

double goal2_update(ModelParams& params, const Batch& batch_c, double lambda2,
                    SgdMomentum& extractor_opt) {
    if (lambda2 < 0.0) throw ConfigError("lambda2 must be >= 0");
    Tape tape;
    Var x = tape.input(batch_c.x, false);
    TapedMlp ext = stage_mlp(tape, params.extractor, true);
    TapedMlp critic = stage_mlp(tape, params.critic, false);
    Var scores = forward_mlp(tape, critic, forward_mlp(tape, ext, x));
    LossValue lw = wasserstein_loss(tape, scores);
    tape.backward(tape.scale(lw.var, lambda2));
    extractor_opt.step(params.extractor, tape, ext);
    return lw.snapshot;
}

namespace {

struct EvalOut {
    double loss_cls = 0.0;
    double loss_w = 0.0;
    double accuracy = 0.0;
};

EvalOut eval_split(const ModelParams& params, const Dataset& ds) {
    Tensor reps = forward_mlp(params.extractor, dataset_features(ds));
    Tensor logits = forward_mlp(params.classifier, reps);
    Tensor scores = forward_mlp(params.critic, reps);
    Tape tape;
    EvalOut out;
    out.loss_cls = cross_entropy_loss(tape, tape.input(logits, false), ds.y).snapshot;
    out.loss_w = -mean(scores);
    size_t hits = 0;
    for (size_t i = 0; i < logits.rows(); ++i) {
        size_t best = 0;
        for (size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(i, c) > logits.at(i, best)) best = c;
        if (best == ds.y[i]) ++hits;
    }
    out.accuracy = static_cast<double>(hits) / static_cast<double>(ds.size());
    return out;
}

void validate_config(const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (cfg.n_inner == 0) throw ConfigError("inner step count must be >= 1");
    if (cfg.epochs == 0) throw ConfigError("epoch count must be >= 1");
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0) throw ConfigError("loss weights must be >= 0");
    if (!(cfg.clip > 0.0)) throw ConfigError("clip bound must be positive");
    if (cfg.rep_dim == 0) throw ConfigError("representation dim must be >= 1");
    if (cfg.heldout_fraction < 0.0 || cfg.heldout_fraction >= 1.0)
        throw ConfigError("heldout fraction must lie in [0, 1)");
}

TrainResult run_loop(const TrainConfig& cfg, const Dataset& target, const Dataset* source,
                     const TrainHooks& hooks) {
    validate_config(cfg);
    if (target.size() == 0) throw Error("target dataset is empty");
    if (!target.has_task_label) throw Error("target dataset carries no task labels");

    const bool critic_on = source != nullptr && !(cfg.n_outer && *cfg.n_outer == 0);
    const bool goal2_on = cfg.lambda2 > 0.0;
    const size_t outer_auto = (target.size() + cfg.batch_size - 1) / cfg.batch_size;
    const size_t outer_count =
        (cfg.n_outer && *cfg.n_outer > 0) ? *cfg.n_outer : outer_auto;

    uint16_t y1 = 0;
    if (critic_on) {
        if (source->size() == 0) throw Error("source dataset is empty");
        y1 = cfg.fixed_nuisance ? *cfg.fixed_nuisance : most_frequent_nuisance(*source);
        if (y1 >= source->nuis_classes)
            throw ConfigError("fixed nuisance class " + std::to_string(y1) +
                              " outside the source label space");
    }

    Rng root(cfg.seed);
    Rng rng_init_e = root.derive("init-extractor");
    Rng rng_init_c = root.derive("init-classifier");
    Rng rng_init_d = root.derive("init-critic");
    Rng rng_held = root.derive("heldout");
    Rng rng_a = root.derive("batch-a");
    Rng rng_b = root.derive("batch-b");
    Rng rng_c = root.derive("batch-c");

    ModelParams params;
    std::vector<size_t> ext_widths = cfg.extractor_hidden;
    ext_widths.push_back(cfg.rep_dim);
    params.extractor = init_mlp(target.feat_dim, ext_widths, rng_init_e);
    params.classifier = init_mlp(cfg.rep_dim, {target.task_classes}, rng_init_c);
    std::vector<size_t> critic_widths = cfg.critic_hidden;
    critic_widths.push_back(1);
    params.critic = init_mlp(cfg.rep_dim, critic_widths, rng_init_d);

    // Deterministic heldout carve: shuffle once, first slice held out.
    std::vector<uint32_t> order(target.size());
    std::iota(order.begin(), order.end(), 0u);
    for (size_t i = order.size(); i > 1; --i) {
        size_t j = rng_held.next_u64(i);
        std::swap(order[i - 1], order[j]);
    }
    const auto held_n =
        static_cast<size_t>(cfg.heldout_fraction * static_cast<double>(target.size()));
    std::vector<uint32_t> held_idx(order.begin(), order.begin() + held_n);
    std::vector<uint32_t> train_idx(order.begin() + held_n, order.end());
    Dataset train_ds = dataset_subset(target, train_idx);
    Dataset held_ds = dataset_subset(target, held_idx);

    SgdMomentum opt_cls(cfg.model_lr, cfg.momentum);
    SgdMomentum opt_ext_g1(cfg.model_lr, cfg.momentum);
    SgdMomentum opt_ext_g2(cfg.model_lr, cfg.momentum);
    Adam opt_critic(cfg.critic_lr, true, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    StepLr sched(cfg.model_lr, cfg.lr_step, cfg.lr_gamma);

    TrainResult result;
    result.best_heldout_accuracy = -1.0;
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = sched.at_epoch(epoch);
        opt_cls.set_lr(lr);
        opt_ext_g1.set_lr(lr);
        opt_ext_g2.set_lr(lr);
        double obj_sum = 0.0;
        size_t obj_count = 0;
        try {
            for (size_t outer = 0; outer < outer_count; ++outer) {
                if (critic_on) {
                    Batch a = sample_batch_A(*source, y1, cfg.batch_size, rng_a);
                    Batch b = sample_batch_B(*source, cfg.batch_size, rng_b);
                    obj_sum += critic_update(params, a.x, b.x, opt_critic, cfg.clip,
                                             cfg.critic_sign);
                    ++obj_count;
                }
                for (size_t inner = 0; inner < cfg.n_inner; ++inner) {
                    Batch c = sample_batch_C(train_ds, cfg.batch_size, rng_c);
                    goal1_update(params, c, cfg.lambda1, opt_ext_g1, opt_cls);
                    if (goal2_on) goal2_update(params, c, cfg.lambda2, opt_ext_g2);
                }
            }
        } catch (const NumericalError& e) {
            throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        double obj_mean = obj_count == 0 ? 0.0 : obj_sum / static_cast<double>(obj_count);

        EvalOut tr = eval_split(params, train_ds);
        result.metrics.push_back(
            {epoch, "train", tr.loss_cls, tr.loss_w, obj_mean, tr.accuracy, lr});
        if (hooks.on_metrics) hooks.on_metrics(result.metrics.back());
        if (held_ds.size() > 0) {
            EvalOut he = eval_split(params, held_ds);
            result.metrics.push_back(
                {epoch, "heldout", he.loss_cls, he.loss_w, obj_mean, he.accuracy, lr});
            if (hooks.on_metrics) hooks.on_metrics(result.metrics.back());
            if (he.accuracy > result.best_heldout_accuracy) {
                result.best_heldout_accuracy = he.accuracy;
                result.best_params = params;
                result.best_epoch = epoch;
            }
        }
        if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, params);
    }
    result.final_params = params;
    if (held_ds.size() == 0) {
        result.best_params = params;
        result.best_epoch = cfg.epochs - 1;
        result.best_heldout_accuracy = 0.0;
    }
    return result;
}

}  // namespace

TrainResult train_purified(const TrainConfig& cfg, const Dataset& target, const Dataset& source,
                           const TrainHooks& hooks) {
    if (!source.has_nuisance_label) throw Error("source dataset carries no nuisance labels");
    return run_loop(cfg, target, &source, hooks);
}

TrainResult train_goal1_only(const TrainConfig& cfg, const Dataset& target,
                             const TrainHooks& hooks) {
    TrainConfig g1 = cfg;
    g1.lambda2 = 0.0;
    g1.n_outer = 0;
    return run_loop(g1, target, nullptr, hooks);
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "epoch,split,loss_cls,loss_w,critic_obj,accuracy,lr\n";
    out.precision(17);
    for (const EpochMetrics& m : metrics) {
        out << m.epoch << ',' << m.split << ',' << m.loss_cls << ',' << m.loss_w << ','
            << m.critic_obj << ',' << m.accuracy << ',' << m.lr << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

std::vector<EpochMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    size_t offset = 0;
    if (!std::getline(in, line)) throw FormatError("empty metrics file", 0);
    if (line != "epoch,split,loss_cls,loss_w,critic_obj,accuracy,lr")
        throw FormatError("unexpected metrics header", 0);
    offset += line.size() + 1;
    std::vector<EpochMetrics> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            offset += 1;
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) throw FormatError("metrics row needs 7 fields", offset);
        EpochMetrics m;
        try {
            m.epoch = std::stoul(fields[0]);
            m.split = fields[1];
            m.loss_cls = std::stod(fields[2]);
            m.loss_w = std::stod(fields[3]);
            m.critic_obj = std::stod(fields[4]);
            m.accuracy = std::stod(fields[5]);
            m.lr = std::stod(fields[6]);
        } catch (const std::exception&) {
            throw FormatError("unparseable metrics row", offset);
        }
        rows.push_back(std::move(m));
        offset += line.size() + 1;
    }
    return rows;
}

}  // namespace pl
