#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purelearn/rng.hpp"
#include "purelearn/tensor.hpp"

namespace pl {

// Feature-vector dataset with optional task labels y, optional nuisance
// labels y_tir, and optional generator ground-truth latents (the task and
// nuisance factor draws behind each sample). Immutable after generation.
struct Dataset {
    size_t feat_dim = 0;
    bool has_task_label = false;
    bool has_nuisance_label = false;
    uint16_t task_classes = 0;  // label space of y
    uint16_t nuis_classes = 0;  // label space of y_tir
    std::vector<float> features;  // size() * feat_dim, row-major
    std::vector<uint16_t> y;
    std::vector<uint16_t> y_tir;
    std::vector<float> latents;  // 2 per sample: task factor, nuisance factor

    size_t size() const {
        return feat_dim == 0 ? 0 : features.size() / feat_dim;
    }
    const float* row(size_t i) const { return features.data() + i * feat_dim; }
};

struct SyntheticGenConfig {
    uint64_t seed = 42;
    size_t n_train = 2000;
    size_t n_test = 10000;
    size_t n_source = 20000;
    uint16_t task_classes = 10;
    uint16_t nuis_classes = 5;
    size_t d_task = 32;
    size_t d_nuis = 32;
    double prototype_scale = 1.0;  // minimum pairwise prototype distance
    double noise_sigma = 0.1;
    double train_bias_rho = 0.95;  // P(train y_tir = bias_map(y))
};

struct SyntheticData {
    Dataset train;   // task-labeled, nuisance correlated with y at rho
    Dataset test;    // task-labeled, nuisance independent of y
    Dataset source;  // nuisance-labeled only, task factor independent of y_tir
};

// The nuisance class a task class is spuriously tied to in biased training data.
inline uint16_t bias_map(uint16_t task_class, uint16_t nuis_classes) {
    return static_cast<uint16_t>(task_class % nuis_classes);
}

// Draws each sample's task class uniformly, places its task block at a
// unit-norm class prototype plus N(0, sigma^2) noise, and builds the nuisance
// block the same way from the sample's nuisance class. Train nuisance classes
// follow bias_map(y) with probability rho (uniform otherwise); test and
// source nuisance classes are uniform and independent of y. Deterministic
// per seed.
SyntheticData generate_synthetic_biased(const SyntheticGenConfig& cfg);

// File format: magic "PLD1"; u32 n_samples, u32 feat_dim, u8 has_task_label,
// u8 has_nuisance_label, u16 task classes, u16 nuisance classes; per sample
// feat_dim little-endian f32, then u16 y if present, u16 y_tir if present;
// optional trailing block "LAT1" with 2 f32 latent factors per sample.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// A minibatch as f64 features plus the labels the sampler carries
// (nuisance labels from batches A/B, task labels from batch C).
struct Batch {
    Tensor x;
    std::vector<uint16_t> labels;
};

// m uniform-with-replacement draws from the samples with y_tir = y1.
Batch sample_batch_A(const Dataset& src, uint16_t y1, size_t m, Rng& rng);
// m uniform-with-replacement draws from all of src.
Batch sample_batch_B(const Dataset& src, size_t m, Rng& rng);
// m uniform-with-replacement draws from the task-labeled dataset.
Batch sample_batch_C(const Dataset& tgt, size_t m, Rng& rng);

// Most populous nuisance class; ties resolve to the lowest class index.
uint16_t most_frequent_nuisance(const Dataset& src);

// All features of ds (or the given rows) as an n x feat_dim f64 tensor.
Tensor dataset_features(const Dataset& ds);
Tensor dataset_features(const Dataset& ds, const std::vector<uint32_t>& rows);

// Copy of the given rows as a standalone dataset (labels and latents kept).
Dataset dataset_subset(const Dataset& ds, const std::vector<uint32_t>& rows);

}  // namespace pl
