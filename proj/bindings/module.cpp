#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "purelearn/analysis.hpp"
#include "purelearn/data.hpp"
#include "purelearn/errors.hpp"
#include "purelearn/nn.hpp"
#include "purelearn/otoracle.hpp"
#include "purelearn/train.hpp"

namespace py = pybind11;

namespace {

pl::Tensor to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() == 1) {
        pl::Tensor t(static_cast<size_t>(arr.shape(0)), 1);
        std::copy(arr.data(), arr.data() + arr.shape(0), t.data());
        return t;
    }
    if (arr.ndim() != 2) throw pl::ConfigError("expected a 1-d or 2-d array");
    pl::Tensor t(static_cast<size_t>(arr.shape(0)), static_cast<size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + t.size(), t.data());
    return t;
}

py::array_t<double> to_numpy(const pl::Tensor& t) {
    py::array_t<double> arr({t.rows(), t.cols()});
    std::copy(t.data(), t.data() + t.size(), arr.mutable_data());
    return arr;
}

py::array_t<float> dataset_features_f32(const pl::Dataset& ds) {
    py::array_t<float> arr({ds.size(), ds.feat_dim});
    std::copy(ds.features.begin(), ds.features.end(), arr.mutable_data());
    return arr;
}

py::array_t<uint16_t> labels_np(const std::vector<uint16_t>& v) {
    py::array_t<uint16_t> arr(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), arr.mutable_data());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "biased-data benchmark core: generation, purified training, transport oracles";

    py::register_exception<pl::ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<pl::FormatError>(mod, "FormatError", PyExc_ValueError);
    py::register_exception<pl::IoError>(mod, "IoError", PyExc_OSError);
    py::register_exception<pl::NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

    py::class_<pl::Dataset>(mod, "Dataset")
        .def_readonly("feat_dim", &pl::Dataset::feat_dim)
        .def_readonly("has_task_label", &pl::Dataset::has_task_label)
        .def_readonly("has_nuisance_label", &pl::Dataset::has_nuisance_label)
        .def_readonly("task_classes", &pl::Dataset::task_classes)
        .def_readonly("nuis_classes", &pl::Dataset::nuis_classes)
        .def("__len__", &pl::Dataset::size)
        .def("features", &dataset_features_f32)
        .def("task_labels", [](const pl::Dataset& ds) { return labels_np(ds.y); })
        .def("nuisance_labels", [](const pl::Dataset& ds) { return labels_np(ds.y_tir); });

    py::class_<pl::SyntheticGenConfig>(mod, "GenConfig")
        .def(py::init<>())
        .def_readwrite("seed", &pl::SyntheticGenConfig::seed)
        .def_readwrite("n_train", &pl::SyntheticGenConfig::n_train)
        .def_readwrite("n_test", &pl::SyntheticGenConfig::n_test)
        .def_readwrite("n_source", &pl::SyntheticGenConfig::n_source)
        .def_readwrite("task_classes", &pl::SyntheticGenConfig::task_classes)
        .def_readwrite("nuis_classes", &pl::SyntheticGenConfig::nuis_classes)
        .def_readwrite("d_task", &pl::SyntheticGenConfig::d_task)
        .def_readwrite("d_nuis", &pl::SyntheticGenConfig::d_nuis)
        .def_readwrite("prototype_scale", &pl::SyntheticGenConfig::prototype_scale)
        .def_readwrite("noise_sigma", &pl::SyntheticGenConfig::noise_sigma)
        .def_readwrite("train_bias_rho", &pl::SyntheticGenConfig::train_bias_rho);

    py::class_<pl::SyntheticData>(mod, "SyntheticData")
        .def_readonly("train", &pl::SyntheticData::train)
        .def_readonly("test", &pl::SyntheticData::test)
        .def_readonly("source", &pl::SyntheticData::source);

    mod.def("generate", &pl::generate_synthetic_biased, py::arg("config"),
            py::call_guard<py::gil_scoped_release>(),
            "generate biased train, unbiased test and nuisance-labeled source splits");
    mod.def("read_dataset", &pl::read_dataset, py::arg("path"));
    mod.def("write_dataset", &pl::write_dataset, py::arg("dataset"), py::arg("path"));

    py::enum_<pl::CriticSign>(mod, "CriticSign")
        .value("a_minus_b", pl::CriticSign::a_minus_b)
        .value("b_minus_a", pl::CriticSign::b_minus_a);

    py::class_<pl::TrainConfig>(mod, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("critic_lr", &pl::TrainConfig::critic_lr)
        .def_readwrite("model_lr", &pl::TrainConfig::model_lr)
        .def_readwrite("momentum", &pl::TrainConfig::momentum)
        .def_readwrite("batch_size", &pl::TrainConfig::batch_size)
        .def_readwrite("n_outer", &pl::TrainConfig::n_outer)
        .def_readwrite("n_inner", &pl::TrainConfig::n_inner)
        .def_readwrite("lambda1", &pl::TrainConfig::lambda1)
        .def_readwrite("lambda2", &pl::TrainConfig::lambda2)
        .def_readwrite("clip", &pl::TrainConfig::clip)
        .def_readwrite("epochs", &pl::TrainConfig::epochs)
        .def_readwrite("seed", &pl::TrainConfig::seed)
        .def_readwrite("fixed_nuisance", &pl::TrainConfig::fixed_nuisance)
        .def_readwrite("extractor_hidden", &pl::TrainConfig::extractor_hidden)
        .def_readwrite("rep_dim", &pl::TrainConfig::rep_dim)
        .def_readwrite("critic_hidden", &pl::TrainConfig::critic_hidden)
        .def_readwrite("critic_sign", &pl::TrainConfig::critic_sign)
        .def_readwrite("lr_step", &pl::TrainConfig::lr_step)
        .def_readwrite("lr_gamma", &pl::TrainConfig::lr_gamma)
        .def_readwrite("heldout_fraction", &pl::TrainConfig::heldout_fraction);

    py::class_<pl::ModelParams>(mod, "ModelParams");
    mod.def("save_model", &pl::save_model, py::arg("params"), py::arg("path"));
    mod.def("load_model", &pl::load_model, py::arg("path"));

    py::class_<pl::EpochMetrics>(mod, "EpochMetrics")
        .def_readonly("epoch", &pl::EpochMetrics::epoch)
        .def_readonly("split", &pl::EpochMetrics::split)
        .def_readonly("loss_cls", &pl::EpochMetrics::loss_cls)
        .def_readonly("loss_w", &pl::EpochMetrics::loss_w)
        .def_readonly("critic_obj", &pl::EpochMetrics::critic_obj)
        .def_readonly("accuracy", &pl::EpochMetrics::accuracy)
        .def_readonly("lr", &pl::EpochMetrics::lr);

    py::class_<pl::TrainResult>(mod, "TrainResult")
        .def_readonly("final_params", &pl::TrainResult::final_params)
        .def_readonly("best_params", &pl::TrainResult::best_params)
        .def_readonly("best_epoch", &pl::TrainResult::best_epoch)
        .def_readonly("best_heldout_accuracy", &pl::TrainResult::best_heldout_accuracy)
        .def_readonly("metrics", &pl::TrainResult::metrics);

    mod.def(
        "train_purified",
        [](const pl::TrainConfig& cfg, const pl::Dataset& target, const pl::Dataset& source) {
            return pl::train_purified(cfg, target, source, {});
        },
        py::arg("config"), py::arg("target"), py::arg("source"),
        py::call_guard<py::gil_scoped_release>(),
        "alternate critic ascent with classification plus suppression descent");
    mod.def(
        "train_goal1",
        [](const pl::TrainConfig& cfg, const pl::Dataset& target) {
            return pl::train_goal1_only(cfg, target, {});
        },
        py::arg("config"), py::arg("target"), py::call_guard<py::gil_scoped_release>(),
        "classification-only baseline with the same schedule");

    mod.def(
        "evaluate_accuracy",
        [](const pl::ModelParams& params, const pl::Dataset& ds) {
            return pl::evaluate_accuracy(params.extractor, params.classifier, ds);
        },
        py::arg("params"), py::arg("dataset"));
    mod.def(
        "extract",
        [](const pl::ModelParams& params, const pl::Dataset& ds) {
            return to_numpy(pl::forward_mlp(params.extractor, pl::dataset_features(ds)));
        },
        py::arg("params"), py::arg("dataset"), "representations of every sample, n x rep_dim");

    py::class_<pl::PcaReport>(mod, "PcaReport")
        .def_readonly("eigenvalues", &pl::PcaReport::eigenvalues)
        .def_readonly("proportions", &pl::PcaReport::proportions)
        .def_readonly("cumulative", &pl::PcaReport::cumulative)
        .def_readonly("top_k", &pl::PcaReport::top_k)
        .def_readonly("top_k_cumulative", &pl::PcaReport::top_k_cumulative)
        .def_readonly("degenerate", &pl::PcaReport::degenerate);

    mod.def(
        "pca_explained_variance",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
           size_t top_k) { return pl::pca_explained_variance(to_tensor(points), top_k); },
        py::arg("points"), py::arg("top_k") = 2);

    mod.def(
        "w1_exact",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return pl::w1_exact(to_tensor(a), to_tensor(b));
        },
        py::arg("a"), py::arg("b"),
        "exact W1 between equal-size point clouds (sorted pairing in 1-d, assignment otherwise)");
    mod.def(
        "critic_w1_estimate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, size_t steps,
           uint64_t seed) {
            pl::CriticEstimateConfig cfg;
            cfg.steps = steps;
            cfg.seed = seed;
            return pl::critic_w1_estimate(to_tensor(a), to_tensor(b), cfg);
        },
        py::arg("a"), py::arg("b"), py::arg("steps") = 600, py::arg("seed") = 0,
        "certified lower estimate of W1 from a trained weight-clipped critic");

    py::class_<pl::TrialStats>(mod, "TrialStats")
        .def_readonly("trials", &pl::TrialStats::trials)
        .def_readonly("violations", &pl::TrialStats::violations)
        .def_readonly("max_gap", &pl::TrialStats::max_gap);

    mod.def("theorem1_trials", &pl::theorem1_trials, py::arg("trials"), py::arg("seed") = 1,
            "randomized checks that discrepancy transfers across clouds within 2*K*W1");
    mod.def("error_bound_trials", &pl::error_bound_trials, py::arg("trials"), py::arg("seed") = 1,
            "randomized checks of the classifier-error transfer bound");
}
