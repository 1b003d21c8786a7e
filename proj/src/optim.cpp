#include "purelearn/optim.hpp"

#include <cmath>

#include "purelearn/errors.hpp"

namespace pl {

namespace {

void collect(Mlp& mlp, const Tape& tape, const TapedMlp& staged,
             std::vector<Tensor*>& params, std::vector<const Tensor*>& grads) {
    if (staged.weights.size() != mlp.layers.size())
        throw Error("optimizer: staged parameter count mismatch");
    for (size_t i = 0; i < mlp.layers.size(); ++i) {
        params.push_back(&mlp.layers[i].W);
        grads.push_back(&tape.grad(staged.weights[i]));
        params.push_back(&mlp.layers[i].b);
        grads.push_back(&tape.grad(staged.biases[i]));
    }
}

void check_slots(std::vector<Tensor>& state, const std::vector<Tensor*>& params,
                 const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) throw Error("optimizer: params/grads count mismatch");
    if (state.empty()) {
        for (const Tensor* p : params) state.emplace_back(p->rows(), p->cols(), 0.0);
    }
    if (state.size() != params.size()) throw Error("optimizer: parameter list changed size");
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state[i]))
            throw Error("optimizer: shape mismatch");
    }
}

}  // namespace

SgdMomentum::SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
}

void SgdMomentum::step(const std::vector<Tensor*>& params,
                       const std::vector<const Tensor*>& grads) {
    check_slots(velocity_, params, grads);
    for (size_t i = 0; i < params.size(); ++i) {
        double* v = velocity_[i].data();
        double* p = params[i]->data();
        const double* g = grads[i]->data();
        for (size_t k = 0; k < params[i]->size(); ++k) {
            v[k] = momentum_ * v[k] + g[k];
            p[k] -= lr_ * v[k];
        }
        params[i]->check_finite("sgd step");
    }
}

void SgdMomentum::step(Mlp& mlp, const Tape& tape, const TapedMlp& staged) {
    std::vector<Tensor*> params;
    std::vector<const Tensor*> grads;
    collect(mlp, tape, staged, params, grads);
    step(params, grads);
}

Adam::Adam(double lr, bool ascend, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), sign_(ascend ? 1.0 : -1.0) {
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("adam betas must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("adam epsilon must be positive");
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    check_slots(m_, params, grads);
    if (v_.empty())
        for (const Tensor* p : params) v_.emplace_back(p->rows(), p->cols(), 0.0);
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        double* m = m_[i].data();
        double* v = v_[i].data();
        double* p = params[i]->data();
        const double* g = grads[i]->data();
        for (size_t k = 0; k < params[i]->size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            double mhat = m[k] / bc1;
            double vhat = v[k] / bc2;
            p[k] += sign_ * lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
        params[i]->check_finite("adam step");
    }
}

void Adam::step(Mlp& mlp, const Tape& tape, const TapedMlp& staged) {
    std::vector<Tensor*> params;
    std::vector<const Tensor*> grads;
    collect(mlp, tape, staged, params, grads);
    step(params, grads);
}

StepLr::StepLr(double base_lr, size_t step_size, double gamma)
    : base_lr_(base_lr), step_size_(step_size), gamma_(gamma) {
    if (step_size == 0) throw ConfigError("schedule step size must be >= 1");
    if (!(base_lr >= 0.0) || !(gamma > 0.0)) throw ConfigError("invalid schedule parameters");
}

double StepLr::at_epoch(size_t epoch) const {
    return base_lr_ * std::pow(gamma_, static_cast<double>(epoch / step_size_));
}

}  // namespace pl
