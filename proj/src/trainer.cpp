#include "dtaad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dtaad/threads.hpp"

namespace dtaad {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348464cull;  // epoch shuffling
constexpr std::uint64_t kDropoutStream = 0x44524f50ull;  // per-window dropout
constexpr std::uint64_t kMamlStream = 0x4d414d4cull;     // task sampling

}  // namespace

VectorF batch_gradient(const DtaadConfig& cfg, const DtaadParams<float>& params, const WindowedDataset& ds,
                       const std::vector<int>& windows, std::uint64_t dropout_salt, double* mean_loss) {
    const std::int64_t n = static_cast<std::int64_t>(windows.size());
    std::vector<VectorF> grads(windows.size());
    std::vector<double> losses(windows.size());
    parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            const int w = windows[static_cast<std::size_t>(i)];
            Rng rng(mix_seed(dropout_salt, {kDropoutStream, static_cast<std::uint64_t>(w)}));
            DtaadParams<float> g;
            const ForwardResult<float> out = forward_training(cfg, params, ds.window(w), rng, &g);
            grads[static_cast<std::size_t>(i)] = pack_params(g);
            losses[static_cast<std::size_t>(i)] = out.loss;
        }
    });
    VectorF total = VectorF::Zero(param_count(params));
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        total += grads[i];
        loss_sum += losses[i];
    }
    total /= static_cast<float>(n);
    if (mean_loss != nullptr) *mean_loss = loss_sum / static_cast<double>(n);
    return total;
}

double evaluate_loss(const DtaadConfig& cfg, const DtaadParams<float>& params, const WindowedDataset& ds,
                     int begin, int end) {
    const std::int64_t n = end - begin;
    if (n <= 0) throw InvalidArgument("evaluate_loss: empty window range");
    std::vector<double> losses(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i)
            losses[static_cast<std::size_t>(i)] =
                forward_eval(cfg, params, ds.window(begin + static_cast<int>(i))).loss;
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(n);
}

TrainResult train(const DtaadConfig& model_cfg, const WindowedDataset& dataset, const TrainerConfig& cfg,
                  const TrainStart* resume) {
    cfg.validate();
    const int n = dataset.window_count();
    if (n == 0) throw InvalidArgument("train: empty dataset");
    if (dataset.dims() != model_cfg.dims || dataset.window_size() != model_cfg.window)
        throw InvalidArgument("train: dataset shape [" + std::to_string(dataset.window_size()) + " x " +
                              std::to_string(dataset.dims()) + "] does not match the model config");

    const int val_count = static_cast<int>(cfg.val_fraction * n);
    const int train_count = n - val_count;
    if (train_count < 1) throw InvalidArgument("train: no training windows left after the validation split");

    DtaadParams<float> params =
        resume != nullptr ? resume->params : init_params<float>(model_cfg, cfg.seed);
    VectorF theta = pack_params(params);
    AdamState<float> opt;
    int start_epoch = 0;
    if (resume != nullptr) {
        opt = resume->opt_state;
        start_epoch = resume->start_epoch;
    }

    TrainResult result;
    result.params = params;
    double best_val = std::numeric_limits<double>::infinity();
    double prev_val = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;

    std::vector<int> order(static_cast<std::size_t>(train_count));
    for (int epoch = start_epoch; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(mix_seed(cfg.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)}));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < train_count; start += cfg.batch_size, ++batches) {
            const int stop = std::min(start + cfg.batch_size, train_count);
            const std::vector<int> batch(order.begin() + start, order.begin() + stop);
            const std::uint64_t salt =
                mix_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batches)});
            double batch_loss = 0.0;
            const VectorF grad = batch_gradient(model_cfg, params, dataset, batch, salt, &batch_loss);
            if (!std::isfinite(batch_loss))
                throw DivergedError("train: non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batches));
            adamw_step(theta, grad, opt, lr, cfg.beta1, cfg.beta2, cfg.weight_decay);
            unpack_params(theta, params);
            epoch_loss += batch_loss;
        }
        epoch_loss /= std::max(batches, 1);

        if (cfg.maml.enabled) {
            Rng task_rng(mix_seed(cfg.seed, {kMamlStream, static_cast<std::uint64_t>(epoch)}));
            std::vector<std::vector<int>> tasks(static_cast<std::size_t>(cfg.maml.tasks_per_round));
            for (auto& task : tasks) {
                task.resize(static_cast<std::size_t>(std::min(cfg.batch_size, train_count)));
                for (auto& w : task) w = static_cast<int>(task_rng.below(static_cast<std::uint64_t>(train_count)));
            }
            DtaadParams<float> scratch = params;
            maml_round(
                theta, cfg.maml.tasks_per_round,
                [&](const VectorF& at, int task) {
                    unpack_params(at, scratch);
                    const std::uint64_t salt = mix_seed(
                        cfg.seed, {kMamlStream, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(task)});
                    return batch_gradient(model_cfg, scratch, dataset, tasks[static_cast<std::size_t>(task)],
                                          salt, nullptr);
                },
                cfg.maml.inner_lr, cfg.maml.meta_lr);
            unpack_params(theta, params);
        }

        const double val_loss =
            val_count > 0 ? evaluate_loss(model_cfg, params, dataset, train_count, n) : epoch_loss;
        result.history.push_back({epoch, epoch_loss, val_loss, lr});

        if (val_loss < best_val) {
            best_val = val_loss;
            result.params = params;
            result.opt_state = opt;
            result.best_epoch = epoch;
        }
        if (epoch > start_epoch && val_loss > prev_val) {
            if (++bad_epochs >= cfg.patience) {
                result.stopped_early = true;
                break;
            }
        } else {
            bad_epochs = 0;
        }
        prev_val = val_loss;
    }
    return result;
}

}  // namespace dtaad
