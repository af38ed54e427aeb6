#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dtaad/data.hpp"
#include "dtaad/model.hpp"

namespace dtaad {

struct MamlConfig {
    bool enabled = false;
    double inner_lr = 0.01;  // alpha
    double meta_lr = 0.01;   // beta
    int tasks_per_round = 3;
};

struct TrainerConfig {
    double lr = 0.01;
    int scheduler_step = 5;
    double scheduler_decay = 0.5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    int batch_size = 128;
    int max_epochs = 5;
    int patience = 1;          // epochs of validation-loss increase tolerated
    double val_fraction = 0.1;  // temporal tail of the training windows
    MamlConfig maml;
    std::uint64_t seed = 42;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
        if (scheduler_step < 1) throw ConfigError("scheduler step must be >= 1");
        if (!(scheduler_decay > 0.0) || scheduler_decay > 1.0)
            throw ConfigError("scheduler decay must lie in (0,1]");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (max_epochs < 1) throw ConfigError("epoch count must be >= 1");
    }
};

/// Step schedule: lr * decay^floor(epoch / step).
inline double lr_at_epoch(const TrainerConfig& cfg, int epoch) {
    if (epoch < 0) throw InvalidArgument("lr_at_epoch: epoch must be >= 0");
    return cfg.lr * std::pow(cfg.scheduler_decay, epoch / cfg.scheduler_step);
}

template <class S>
struct AdamState {
    Vector<S> m;
    Vector<S> v;
    long long step = 0;

    void ensure(std::int64_t n) {
        if (m.size() == n) return;
        if (m.size() != 0) throw StateError("optimizer state size does not match parameters");
        m = Vector<S>::Zero(n);
        v = Vector<S>::Zero(n);
    }
};

/// AdamW with decoupled weight decay:
/// theta <- theta - lr*m_hat/(sqrt(v_hat)+1e-8) - lr*wd*theta.
template <class S>
void adamw_step(Vector<S>& theta, const Vector<S>& grad, AdamState<S>& state, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double weight_decay = 0.01, double eps = 1e-8) {
    if (grad.size() != theta.size())
        throw StateError("adamw_step: gradient has " + std::to_string(grad.size()) + " entries for " +
                         std::to_string(theta.size()) + " parameters");
    state.ensure(theta.size());
    state.step += 1;
    const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
    state.m = b1 * state.m + (S(1) - b1) * grad;
    state.v = b2 * state.v + (S(1) - b2) * grad.cwiseProduct(grad);
    const S corr1 = S(1) - static_cast<S>(std::pow(beta1, static_cast<double>(state.step)));
    const S corr2 = S(1) - static_cast<S>(std::pow(beta2, static_cast<double>(state.step)));
    const S step_size = static_cast<S>(lr) / corr1;
    const S sqrt_corr2 = static_cast<S>(std::sqrt(static_cast<double>(corr2)));
    theta.array() -= step_size * state.m.array() /
                     ((state.v.array().sqrt() / sqrt_corr2) + static_cast<S>(eps));
    theta -= static_cast<S>(lr * weight_decay) * theta;
}

/// First-order MAML round. For each task i the oracle grad_of(theta, i)
/// returns the task gradient at the given parameters; the round computes
/// theta'_i = theta - alpha*grad_of(theta, i) and applies the meta update
/// theta <- theta - beta * sum_i grad_of(theta'_i, i).
template <class S, class GradFn>
void maml_round(Vector<S>& theta, int num_tasks, GradFn&& grad_of, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw InvalidArgument("maml_round: alpha and beta must be positive");
    if (num_tasks < 1) throw InvalidArgument("maml_round: need at least one task");
    Vector<S> meta_grad = Vector<S>::Zero(theta.size());
    for (int task = 0; task < num_tasks; ++task) {
        Vector<S> inner = grad_of(theta, task);
        Vector<S> adapted = theta - static_cast<S>(alpha) * inner;
        meta_grad += grad_of(adapted, task);
    }
    theta -= static_cast<S>(beta) * meta_grad;
}

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    DtaadParams<float> params;  // best-validation parameters
    AdamState<float> opt_state;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    bool stopped_early = false;
};

/// Optional warm start (resume at an epoch boundary). The functional seed
/// derivation makes a resumed run reproduce the uninterrupted one exactly.
struct TrainStart {
    DtaadParams<float> params;
    AdamState<float> opt_state;
    int start_epoch = 0;
};

TrainResult train(const DtaadConfig& model_cfg, const WindowedDataset& dataset, const TrainerConfig& cfg,
                  const TrainStart* resume = nullptr);

/// Mean combined loss over a window range with dropout disabled.
double evaluate_loss(const DtaadConfig& cfg, const DtaadParams<float>& params, const WindowedDataset& ds,
                     int begin, int end);

/// Mean gradient of the combined loss over the given windows; evaluated in
/// window order so results do not depend on the worker count.
VectorF batch_gradient(const DtaadConfig& cfg, const DtaadParams<float>& params, const WindowedDataset& ds,
                       const std::vector<int>& windows, std::uint64_t dropout_salt, double* mean_loss);

}  // namespace dtaad
