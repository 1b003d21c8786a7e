#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "purelearn/analysis.hpp"
#include "purelearn/data.hpp"
#include "purelearn/errors.hpp"
#include "purelearn/nn.hpp"
#include "purelearn/otoracle.hpp"
#include "purelearn/train.hpp"

namespace fs = std::filesystem;

namespace {

// Every key a run config file may contain. Flags override file values.
struct RunConfig {
    uint64_t seed = 42;
    size_t n_train = 2000;
    size_t n_test = 10000;
    size_t n_source = 20000;
    uint16_t C = 10;
    uint16_t n = 5;
    size_t d_task = 32;
    size_t d_nuis = 32;
    double sigma = 0.1;
    double rho = 0.95;
    double alpha1 = 0.001;
    double alpha2 = 0.001;
    size_t m = 64;
    long long n1 = -1;  // -1 auto, 0 disables the critic
    size_t n2 = 3;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double clip = 0.1;
    size_t epochs = 50;
    long long y1 = -1;  // -1 auto (most frequent nuisance class)
    std::string critic_sign = "a_minus_b";
    double momentum = 0.9;
    size_t steplr_step = 7;
    double steplr_gamma = 0.1;
    std::string extractor_hidden;  // comma-separated relu widths, empty = linear
};

// Run options accept repeats with last-wins so values injected from a config
// file are overridden by explicit flags, which always come later in argv.
CLI::Option* run_opt(CLI::Option* opt) {
    return opt->capture_default_str()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void add_run_options(CLI::App* cmd, RunConfig& rc, std::string& config_path) {
    cmd->add_option("--config", config_path,
                    "read options from a key=value config file; flags take precedence")
        ->configurable(false);
    run_opt(cmd->add_option("--seed", rc.seed, "seed for generation, init and batch draws"));
    run_opt(cmd->add_option("--n_train", rc.n_train, "target training samples"));
    run_opt(cmd->add_option("--n_test", rc.n_test, "unbiased test samples"));
    run_opt(cmd->add_option("--n_source", rc.n_source, "nuisance-labeled source samples"));
    run_opt(cmd->add_option("--C", rc.C, "task classes")->check(CLI::Range(1, 65535)));
    run_opt(cmd->add_option("--n", rc.n, "nuisance classes")->check(CLI::Range(1, 65535)));
    run_opt(cmd->add_option("--d_task", rc.d_task, "task feature block width"));
    run_opt(cmd->add_option("--d_nuis", rc.d_nuis, "nuisance feature block width"));
    run_opt(cmd->add_option("--sigma", rc.sigma, "gaussian noise level around class prototypes"));
    run_opt(cmd->add_option("--rho", rc.rho, "train-split nuisance-task correlation in [0,1]")
                ->check(CLI::Range(0.0, 1.0)));
    run_opt(cmd->add_option("--alpha1", rc.alpha1, "critic learning rate (Adam)"));
    run_opt(cmd->add_option("--alpha2", rc.alpha2, "extractor/classifier learning rate (SGD)"));
    run_opt(cmd->add_option("--m", rc.m, "minibatch size for batches A, B and C"));
    run_opt(cmd->add_option("--n1", rc.n1,
                            "critic steps per epoch; -1 = ceil(n_target/m), 0 = critic disabled")
                ->check(CLI::Range(-1LL, 1000000LL)));
    run_opt(cmd->add_option("--n2", rc.n2, "classifier/suppression steps per critic step"));
    run_opt(cmd->add_option("--lambda1", rc.lambda1, "classification loss weight"));
    run_opt(cmd->add_option("--lambda2", rc.lambda2, "suppression loss weight"));
    run_opt(cmd->add_option("--clip", rc.clip, "critic weight limit after each critic step"));
    run_opt(cmd->add_option("--epochs", rc.epochs, "training epochs"));
    run_opt(cmd->add_option("--y1", rc.y1,
                            "nuisance class for batch A; -1 = most frequent in the source set")
                ->check(CLI::Range(-1LL, 65535LL)));
    run_opt(cmd->add_option("--critic_sign", rc.critic_sign,
                            "which score-mean difference the critic ascends")
                ->check(CLI::IsMember({"a_minus_b", "b_minus_a"})));
    run_opt(cmd->add_option("--momentum", rc.momentum, "SGD momentum"));
    run_opt(cmd->add_option("--steplr_step", rc.steplr_step,
                            "epochs per learning-rate decay step"));
    run_opt(cmd->add_option("--steplr_gamma", rc.steplr_gamma, "learning-rate decay factor"));
    run_opt(cmd->add_option("--extractor_hidden", rc.extractor_hidden,
                            "comma-separated relu widths before the 128-dim output; "
                            "empty = linear"));
}

// Flat key=value config files. Values may be double-quoted; blank lines and
// lines starting with # or ; are skipped. Returns pairs in file order.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pl::ConfigError("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    size_t lineno = 0;
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t\r");
        size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos || t[0] == '[')
            throw pl::ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw pl::ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        entries.emplace_back(key, value);
    }
    return entries;
}

// If argv selects a subcommand that takes --config and passes one, validate
// the file's keys against that subcommand and splice "--key value" pairs in
// right after the subcommand token. Explicit flags always appear later, so
// last-wins option policy gives them precedence.
std::vector<std::string> inject_config_args(int argc, char** argv,
                                            const std::vector<CLI::App*>& config_cmds) {
    std::vector<std::string> args(argv + 1, argv + argc);
    CLI::App* cmd = nullptr;
    size_t sub_pos = 0;
    for (size_t i = 0; i < args.size() && !cmd; ++i)
        for (CLI::App* candidate : config_cmds)
            if (args[i] == candidate->get_name()) {
                cmd = candidate;
                sub_pos = i;
                break;
            }
    if (!cmd) return args;

    std::string path;
    for (size_t i = sub_pos + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::vector<std::string> injected;
    for (const auto& [key, value] : read_config_file(path)) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr || !opt->get_configurable())
            throw pl::ConfigError("unknown key '" + key + "' in config file " + path);
        injected.push_back("--" + key);
        injected.push_back(value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(),
                injected.end());
    return args;
}

std::vector<size_t> parse_hidden(const std::string& s) {
    std::vector<size_t> widths;
    if (s.empty() || s == "none") return widths;
    std::string token;
    std::istringstream ss(s);
    while (std::getline(ss, token, ',')) {
        try {
            size_t pos = 0;
            unsigned long w = std::stoul(token, &pos);
            if (pos != token.size() || w == 0) throw std::invalid_argument(token);
            widths.push_back(w);
        } catch (const std::exception&) {
            throw pl::ConfigError("bad extractor_hidden entry '" + token + "'");
        }
    }
    return widths;
}

pl::SyntheticGenConfig to_gen_config(const RunConfig& rc) {
    pl::SyntheticGenConfig g;
    g.seed = rc.seed;
    g.n_train = rc.n_train;
    g.n_test = rc.n_test;
    g.n_source = rc.n_source;
    g.task_classes = rc.C;
    g.nuis_classes = rc.n;
    g.d_task = rc.d_task;
    g.d_nuis = rc.d_nuis;
    g.noise_sigma = rc.sigma;
    g.train_bias_rho = rc.rho;
    return g;
}

pl::TrainConfig to_train_config(const RunConfig& rc) {
    pl::TrainConfig tc;
    tc.critic_lr = rc.alpha1;
    tc.model_lr = rc.alpha2;
    tc.momentum = rc.momentum;
    tc.batch_size = rc.m;
    if (rc.n1 >= 0) tc.n_outer = static_cast<size_t>(rc.n1);
    tc.n_inner = rc.n2;
    tc.lambda1 = rc.lambda1;
    tc.lambda2 = rc.lambda2;
    tc.clip = rc.clip;
    tc.epochs = rc.epochs;
    tc.seed = rc.seed;
    if (rc.y1 >= 0) tc.fixed_nuisance = static_cast<uint16_t>(rc.y1);
    tc.extractor_hidden = parse_hidden(rc.extractor_hidden);
    tc.critic_sign =
        rc.critic_sign == "b_minus_a" ? pl::CriticSign::b_minus_a : pl::CriticSign::a_minus_b;
    tc.lr_step = rc.steplr_step;
    tc.lr_gamma = rc.steplr_gamma;
    return tc;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw pl::IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw pl::IoError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw pl::IoError("write failed for " + path);
}

void write_eval_report(const std::string& path, const std::string& dataset, double accuracy,
                       size_t count) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "dataset,accuracy,n\n" << dataset << ',' << accuracy << ',' << count << '\n';
    write_text(path, ss.str());
}

void write_pca_report(const std::string& path, const pl::PcaReport& report) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "component,eigenvalue,proportion,cumulative\n";
    for (size_t i = 0; i < report.eigenvalues.size(); ++i) {
        ss << (i + 1) << ',' << report.eigenvalues[i] << ',';
        if (!report.degenerate) ss << report.proportions[i] << ',' << report.cumulative[i];
        else ss << ',';
        ss << '\n';
    }
    write_text(path, ss.str());
}

void cmd_gen_data(const RunConfig& rc, const std::string& out_dir, CLI::App* cmd) {
    ensure_dir(out_dir);
    pl::SyntheticData data = pl::generate_synthetic_biased(to_gen_config(rc));
    pl::write_dataset(data.train, out_dir + "/train.pld");
    pl::write_dataset(data.test, out_dir + "/test.pld");
    pl::write_dataset(data.source, out_dir + "/source.pld");
    write_text(out_dir + "/manifest.cfg", cmd->config_to_str(true, false));
    std::printf("wrote %s/train.pld (%zu samples)\n", out_dir.c_str(), data.train.size());
    std::printf("wrote %s/test.pld (%zu samples)\n", out_dir.c_str(), data.test.size());
    std::printf("wrote %s/source.pld (%zu samples)\n", out_dir.c_str(), data.source.size());
    std::printf("wrote %s/manifest.cfg\n", out_dir.c_str());
}

void cmd_train(const RunConfig& rc, const std::string& mode, const std::string& data_dir,
               const std::string& out_dir, bool quiet, bool dry_run, CLI::App* cmd) {
    if (dry_run) {
        to_train_config(rc);  // validate the run keys without touching data
        std::fputs(cmd->config_to_str(true, false).c_str(), stdout);
        return;
    }
    ensure_dir(out_dir);
    pl::Dataset target = pl::read_dataset(data_dir + "/train.pld");
    pl::TrainConfig tc = to_train_config(rc);
    pl::TrainHooks hooks;
    if (!quiet) {
        hooks.on_metrics = [](const pl::EpochMetrics& row) {
            std::printf("epoch %3zu %-7s loss_cls %.4f loss_w %+.4f acc %.4f\n", row.epoch,
                        row.split.c_str(), row.loss_cls, row.loss_w, row.accuracy);
        };
    }
    pl::TrainResult result;
    if (mode == "purified") {
        pl::Dataset source = pl::read_dataset(data_dir + "/source.pld");
        result = pl::train_purified(tc, target, source, hooks);
    } else {
        if (fs::exists(data_dir + "/source.pld"))
            std::fprintf(stderr, "note: goal1 mode ignores %s/source.pld\n", data_dir.c_str());
        result = pl::train_goal1_only(tc, target, hooks);
    }
    pl::save_model(result.final_params, out_dir + "/final.plm");
    pl::save_model(result.best_params, out_dir + "/best.plm");
    pl::write_metrics_csv(result.metrics, out_dir + "/metrics.csv");
    write_text(out_dir + "/config.cfg", cmd->config_to_str(true, false));
    std::printf("final checkpoint: %s/final.plm\n", out_dir.c_str());
    std::printf("best checkpoint:  %s/best.plm (epoch %zu, heldout accuracy %.4f)\n",
                out_dir.c_str(), result.best_epoch, result.best_heldout_accuracy);
}

void cmd_eval(const std::string& model_path, const std::string& data_path,
              const std::string& report_path) {
    pl::ModelParams params = pl::load_model(model_path);
    pl::Dataset ds = pl::read_dataset(data_path);
    double acc = pl::evaluate_accuracy(params.extractor, params.classifier, ds);
    std::printf("accuracy %.6f (n=%zu)\n", acc, ds.size());
    write_eval_report(report_path, data_path, acc, ds.size());
}

void cmd_analyze(const std::string& model_path, const std::string& compare_path,
                 const std::string& data_path, const std::string& out_dir, size_t top_k) {
    ensure_dir(out_dir);
    pl::ModelParams params = pl::load_model(model_path);
    pl::Dataset ds = pl::read_dataset(data_path);
    pl::Tensor x = pl::dataset_features(ds);
    pl::PcaReport report =
        pl::pca_explained_variance(pl::forward_mlp(params.extractor, x), top_k);
    write_pca_report(out_dir + "/pca_report.csv", report);
    if (report.degenerate)
        std::fprintf(stderr, "note: representation cloud is degenerate (zero variance)\n");
    else
        std::printf("top-%zu proportion %.6f\n", report.top_k, report.top_k_cumulative);
    if (ds.has_task_label) {
        double acc = pl::evaluate_accuracy(params.extractor, params.classifier, ds);
        write_eval_report(out_dir + "/eval_report.csv", data_path, acc, ds.size());
        std::printf("accuracy %.6f (n=%zu)\n", acc, ds.size());
    }
    if (!compare_path.empty()) {
        pl::ModelParams other = pl::load_model(compare_path);
        pl::PcaReport other_report =
            pl::pca_explained_variance(pl::forward_mlp(other.extractor, x), top_k);
        write_pca_report(out_dir + "/pca_report_compare.csv", other_report);
        std::printf("top-%zu proportion (compare) %.6f\n", other_report.top_k,
                    other_report.top_k_cumulative);
    }
}

void cmd_oracle_w1(const std::string& a_path, const std::string& b_path, bool estimate,
                   size_t steps, uint64_t seed) {
    pl::Tensor a = pl::dataset_features(pl::read_dataset(a_path));
    pl::Tensor b = pl::dataset_features(pl::read_dataset(b_path));
    if (a.cols() != b.cols()) throw pl::Error("point clouds have different dimensions");
    size_t k = std::min(a.rows(), b.rows());
    if (a.cols() > 1) k = std::min<size_t>(k, 512);
    pl::Rng rng = pl::Rng(seed).derive("oracle-resample");
    if (a.rows() != k) {
        std::fprintf(stderr, "note: resampled first cloud %zu -> %zu points\n", a.rows(), k);
        a = pl::resample_rows(a, k, rng);
    }
    if (b.rows() != k) {
        std::fprintf(stderr, "note: resampled second cloud %zu -> %zu points\n", b.rows(), k);
        b = pl::resample_rows(b, k, rng);
    }
    std::printf("quantity,value\n");
    std::printf("w1_exact,%.17g\n", pl::w1_exact(a, b));
    if (estimate) {
        pl::CriticEstimateConfig cfg;
        cfg.steps = steps;
        cfg.seed = seed;
        std::printf("critic_estimate,%.17g\n", pl::critic_w1_estimate(a, b, cfg));
    }
}

void print_trials(const pl::TrialStats& stats) {
    std::printf("trials: %zu\n", stats.trials);
    std::printf("violations: %zu\n", stats.violations);
    std::printf("max_gap: %.17g\n", stats.max_gap);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic biased-data benchmark: generation, adversarially purified "
                 "training, evaluation, representation analysis and exact transport oracles"};
    app.require_subcommand(1);

    RunConfig rc_gen;
    std::string gen_out, gen_config;
    CLI::App* gen = app.add_subcommand("gen-data", "generate train/test/source datasets");
    add_run_options(gen, rc_gen, gen_config);
    gen->add_option("--out", gen_out, "output directory")->required()->configurable(false);
    gen->callback([&] { cmd_gen_data(rc_gen, gen_out, gen); });

    RunConfig rc_train;
    std::string train_mode, train_data, train_out, train_config;
    bool train_quiet = false, train_dry = false;
    CLI::App* train = app.add_subcommand("train", "train a model on generated datasets");
    add_run_options(train, rc_train, train_config);
    train->add_option("--mode", train_mode, "purified (with critic) or goal1 (baseline)")
        ->required()
        ->check(CLI::IsMember({"purified", "goal1"}))
        ->configurable(false);
    train->add_option("--data", train_data, "directory with train.pld (and source.pld)")
        ->required()
        ->check(CLI::ExistingDirectory)
        ->configurable(false);
    train->add_option("--out", train_out, "output directory")->required()->configurable(false);
    train->add_flag("--quiet", train_quiet, "suppress per-epoch progress")->configurable(false);
    train->add_flag("--dry-run", train_dry, "print the resolved run configuration and exit")
        ->configurable(false);
    train->callback([&] {
        cmd_train(rc_train, train_mode, train_data, train_out, train_quiet, train_dry, train);
    });

    std::string eval_model, eval_data, eval_report = "eval_report.csv";
    CLI::App* eval = app.add_subcommand("eval", "report a checkpoint's accuracy on a dataset");
    eval->add_option("--model", eval_model, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--data", eval_data, "dataset file")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", eval_report, "report csv path")->capture_default_str();
    eval->callback([&] { cmd_eval(eval_model, eval_data, eval_report); });

    std::string an_model, an_compare, an_data, an_out;
    size_t an_top_k = 2;
    CLI::App* analyze =
        app.add_subcommand("analyze", "explained-variance report of a checkpoint's representations");
    analyze->add_option("--model", an_model, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    analyze->add_option("--compare", an_compare, "second checkpoint to report alongside")
        ->check(CLI::ExistingFile);
    analyze->add_option("--data", an_data, "dataset file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", an_out, "output directory")->required();
    analyze->add_option("--top-k", an_top_k, "components in the cumulative proportion")
        ->capture_default_str();
    analyze->callback([&] { cmd_analyze(an_model, an_compare, an_data, an_out, an_top_k); });

    CLI::App* oracle = app.add_subcommand("oracle", "exact transport oracles and bound harnesses");
    oracle->require_subcommand(1);

    std::string w1_a, w1_b;
    bool w1_estimate = false;
    size_t w1_steps = 600;
    uint64_t w1_seed = 0;
    CLI::App* w1 = oracle->add_subcommand("w1", "exact W1 between two dataset point clouds");
    w1->add_option("--a", w1_a, "first dataset file")->required()->check(CLI::ExistingFile);
    w1->add_option("--b", w1_b, "second dataset file")->required()->check(CLI::ExistingFile);
    w1->add_flag("--estimate", w1_estimate, "also train a clipped critic estimate");
    w1->add_option("--steps", w1_steps, "critic training budget")->capture_default_str();
    w1->add_option("--seed", w1_seed, "resampling/estimator seed")->capture_default_str();
    w1->callback([&] { cmd_oracle_w1(w1_a, w1_b, w1_estimate, w1_steps, w1_seed); });

    size_t t1_trials = 1000;
    uint64_t t1_seed = 1;
    CLI::App* t1 = oracle->add_subcommand(
        "theorem1", "randomized discrepancy-transfer bound trials with exact W1");
    t1->add_option("--trials", t1_trials, "trial count")->capture_default_str();
    t1->add_option("--seed", t1_seed, "trial seed")->capture_default_str();
    t1->callback([&] { print_trials(pl::theorem1_trials(t1_trials, t1_seed)); });

    size_t eb_trials = 200;
    uint64_t eb_seed = 1;
    CLI::App* eb = oracle->add_subcommand(
        "error-bound", "randomized classifier-error transfer bound trials with exact W1");
    eb->add_option("--trials", eb_trials, "trial count")->capture_default_str();
    eb->add_option("--seed", eb_seed, "trial seed")->capture_default_str();
    eb->callback([&] { print_trials(pl::error_bound_trials(eb_trials, eb_seed)); });

    try {
        std::vector<std::string> args = inject_config_args(argc, argv, {gen, train});
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const pl::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const pl::FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return 3;
    } catch (const pl::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const pl::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
