#pragma once

#include <cstdint>
#include <vector>

#include "purelearn/nn.hpp"
#include "purelearn/tensor.hpp"

namespace pl {

// SGD with momentum: v <- mu*v + g; theta <- theta - lr*v. Velocity buffers
// are keyed by position in the params list, which must stay stable across
// steps. lr is mutable so an epoch schedule can drive it.
class SgdMomentum {
public:
    SgdMomentum(double lr, double momentum);
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
    // Steps every layer of mlp using the gradients recorded for staged.
    void step(Mlp& mlp, const Tape& tape, const TapedMlp& staged);

private:
    double lr_;
    double momentum_;
    std::vector<Tensor> velocity_;
};

// Bias-corrected Adam. ascend=true applies the update with a plus sign
// (gradient ascent, the critic's direction); t increments once per step()
// regardless of how many tensors it covers.
class Adam {
public:
    explicit Adam(double lr, bool ascend = false, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    double lr() const { return lr_; }
    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
    void step(Mlp& mlp, const Tape& tape, const TapedMlp& staged);

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    double sign_;
    uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

// lr(epoch) = base * gamma^floor(epoch / step_size).
class StepLr {
public:
    StepLr(double base_lr, size_t step_size, double gamma);
    double at_epoch(size_t epoch) const;

private:
    double base_lr_;
    size_t step_size_;
    double gamma_;
};

}  // namespace pl
