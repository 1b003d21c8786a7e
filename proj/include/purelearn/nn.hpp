#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purelearn/autodiff.hpp"
#include "purelearn/rng.hpp"
#include "purelearn/tensor.hpp"

namespace pl {

// Affine map r = x W^T + b. W is out×in, b is 1×out.
struct LinearLayer {
    Tensor W;
    Tensor b;
    size_t in_dim() const { return W.cols(); }
    size_t out_dim() const { return W.rows(); }
};

// Stack of affine layers with relu between them and a linear final output.
// A single layer is a plain affine map (the classifier); the critic is the
// four-layer 512/256/10/1 stack; the extractor width list is configurable.
struct Mlp {
    std::vector<LinearLayer> layers;
    size_t in_dim() const { return layers.front().in_dim(); }
    size_t out_dim() const { return layers.back().out_dim(); }
};

// The three parameter sets of the purified trainer: extractor (input -> 128
// representation), classifier (128 -> n_classes), critic (128 -> scalar score).
struct ModelParams {
    Mlp extractor;
    Mlp classifier;
    Mlp critic;
};

// widths lists every layer output including the last. W ~ U(-1/sqrt(fan_in),
// +1/sqrt(fan_in)), b = 0, drawn deterministically from rng.
Mlp init_mlp(size_t in_dim, const std::vector<size_t>& widths, Rng& rng);

// Inference-mode forward (no tape, no gradients).
Tensor forward_mlp(const Mlp& mlp, const Tensor& x);

// Parameter handles for one Mlp staged onto a tape, parallel to Mlp::layers.
struct TapedMlp {
    std::vector<Var> weights;
    std::vector<Var> biases;
};

TapedMlp stage_mlp(Tape& tape, const Mlp& mlp, bool requires_grad);
Var forward_mlp(Tape& tape, const TapedMlp& staged, Var x);

// Clamps every weight and bias coordinate of the critic to [-c, +c] after
// each of its updates (weight-clipping Lipschitz constraint).
void clip_weights(Mlp& mlp, double c);

double max_abs_param(const Mlp& mlp);

// Largest-singular-value estimate of W by power iteration.
double spectral_norm(const Tensor& w, size_t iters = 100, uint64_t seed = 0);

// Product of per-layer spectral norms: an upper bound on the Lipschitz
// constant of the relu network (relu is 1-Lipschitz).
double lipschitz_product_bound(const Mlp& mlp);

// FNV-1a over the raw parameter bytes; for bit-exactness checks.
uint64_t mlp_hash(const Mlp& mlp);
uint64_t model_hash(const ModelParams& params);

// Checkpoint file: magic "PLM1", then extractor, classifier, critic in order.
// Each Mlp: u32 layer count, then per layer u32 out-dim, u32 in-dim,
// little-endian f64 W row-major, f64 b. Round-trips bit-identically.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace pl
