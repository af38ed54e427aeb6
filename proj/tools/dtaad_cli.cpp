// dtaad: batch CLI over the detection pipeline.
// Exit codes: 0 success, 1 runtime/numeric failure, 2 usage/configuration error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dtaad/pipeline.hpp"

namespace {

using dtaad::RunConfig;

struct FlagStrings {
    std::string feedback = "on";
    std::string maml = "off";
    std::string noise_test = "off";
};

bool parse_switch(const std::string& value, const char* flag) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw dtaad::ConfigError(std::string(flag) + " expects 'on' or 'off', got '" + value + "'");
}

void add_common_options(CLI::App* cmd, RunConfig& cfg, FlagStrings& flags) {
    cmd->set_config("--config", "", "Flat key=value config file; command-line flags win");
    cmd->allow_config_extras(true);
    cmd->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
    cmd->add_option("--window", cfg.model.window, "Sliding window size K")->capture_default_str();
    cmd->add_option("--lambda", cfg.model.lambda, "Loss weight of the global path")->capture_default_str();
    cmd->add_option("--train-fraction", cfg.train_fraction, "Leading fraction of training windows kept")
        ->capture_default_str();
    cmd->add_option("--split-fraction", cfg.split_fraction,
                    "Temporal train/test split applied to unsplit datasets (0 = off)")
        ->capture_default_str();
    cmd->add_option("--q", cfg.pot.q, "POT tail risk probability")->capture_default_str();
    cmd->add_option("--low-quantile", cfg.pot.low_quantile, "POT peak fraction")->capture_default_str();
    cmd->add_option("--feedback", flags.feedback, "Feedback at inference: on/off")->capture_default_str();
    cmd->add_option("--maml", flags.maml, "Meta-learning rounds: on/off")->capture_default_str();

    cmd->add_option("--model.encoder-layers", cfg.model.encoder_layers)->capture_default_str();
    cmd->add_option("--model.ffn-hidden", cfg.model.ffn_hidden)->capture_default_str();
    cmd->add_option("--model.heads", cfg.model.heads)->capture_default_str();
    cmd->add_option("--model.dropout", cfg.model.dropout)->capture_default_str();
    cmd->add_option("--model.leak", cfg.model.leak)->capture_default_str();
    cmd->add_option("--model.local-kernel", cfg.model.local_tcn.kernel_size)->capture_default_str();
    cmd->add_option("--model.local-layers", cfg.model.local_tcn.num_layers)->capture_default_str();
    cmd->add_option("--model.global-kernel", cfg.model.global_tcn.kernel_size)->capture_default_str();
    cmd->add_option("--model.global-base", cfg.model.global_tcn.dilation_base)->capture_default_str();
    cmd->add_flag("--model.no-local-tcn", [&cfg](std::int64_t) { cfg.model.use_local_tcn = false; },
                  "Ablation: bypass the local TCN");
    cmd->add_flag("--model.no-global-tcn", [&cfg](std::int64_t) { cfg.model.use_global_tcn = false; },
                  "Ablation: bypass the global TCN");

    cmd->add_option("--trainer.lr", cfg.trainer.lr)->capture_default_str();
    cmd->add_option("--trainer.batch", cfg.trainer.batch_size)->capture_default_str();
    cmd->add_option("--trainer.epochs", cfg.trainer.max_epochs)->capture_default_str();
    cmd->add_option("--trainer.patience", cfg.trainer.patience)->capture_default_str();
    cmd->add_option("--trainer.step", cfg.trainer.scheduler_step)->capture_default_str();
    cmd->add_option("--trainer.decay", cfg.trainer.scheduler_decay)->capture_default_str();
    cmd->add_option("--trainer.weight-decay", cfg.trainer.weight_decay)->capture_default_str();
    cmd->add_option("--trainer.val-fraction", cfg.trainer.val_fraction)->capture_default_str();
    cmd->add_option("--trainer.maml-alpha", cfg.trainer.maml.inner_lr)->capture_default_str();
    cmd->add_option("--trainer.maml-beta", cfg.trainer.maml.meta_lr)->capture_default_str();
    cmd->add_option("--trainer.maml-tasks", cfg.trainer.maml.tasks_per_round)->capture_default_str();

    cmd->add_option("--noise.snr-db", cfg.noise.snr_db)->capture_default_str();
    cmd->add_option("--noise.attenuation", cfg.noise.attenuation)->capture_default_str();
    cmd->add_option("--noise.apply-to-test", flags.noise_test, "Add calibrated noise to test data: on/off")
        ->capture_default_str();
}

void apply_switches(RunConfig& cfg, const FlagStrings& flags) {
    cfg.model.feedback_at_inference = parse_switch(flags.feedback, "--feedback");
    cfg.trainer.maml.enabled = parse_switch(flags.maml, "--maml");
    cfg.noise.apply_to_test = parse_switch(flags.noise_test, "--noise.apply-to-test");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DTAAD: dual TCN-attention anomaly detection for multivariate time series"};
    app.require_subcommand(1);

    RunConfig cfg;
    FlagStrings flags;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    add_common_options(synth, cfg, flags);
    synth->add_option("--synth.dims", cfg.synth.dims, "Series dimensionality")->capture_default_str();
    synth->add_option("--synth.length", cfg.synth.length, "Rows per split")->capture_default_str();
    synth->add_option("--synth.spike-rate", cfg.synth.spike_rate)->capture_default_str();
    synth->add_option("--synth.shift-rate", cfg.synth.shift_rate)->capture_default_str();
    synth->add_option("--synth.burst-rate", cfg.synth.burst_rate)->capture_default_str();
    synth->add_option("--synth.harmonics", cfg.synth.harmonics)->capture_default_str();

    CLI::App* train = app.add_subcommand("train", "Preprocess, train and calibrate thresholds");
    add_common_options(train, cfg, flags);
    train->add_option("--train", cfg.train_path, "Training CSV");

    CLI::App* detect = app.add_subcommand("detect", "Score a test series against a checkpoint");
    add_common_options(detect, cfg, flags);
    detect->add_option("--test", cfg.test_path, "Test CSV");
    detect->add_option("--checkpoint", cfg.checkpoint_path, "Checkpoint path (default <out>/checkpoint.dtad)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Compute detection and diagnosis metrics");
    add_common_options(evaluate, cfg, flags);
    evaluate->add_option("--scores", cfg.scores_path, "Score CSV from detect");
    evaluate->add_option("--pred", cfg.pred_path, "Predicted label CSV from detect");
    evaluate->add_option("--labels", cfg.labels_path, "Ground-truth label CSV");
    evaluate->add_flag("--point-adjust", cfg.use_point_adjust,
                       "Segment-adjust predictions before scoring (literature protocol)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_switches(cfg, flags);
        if (synth->parsed()) {
            const auto out = dtaad::cmd_synth(cfg);
            std::cout << "wrote " << out.train_path << ", " << out.test_path << ", " << out.labels_path << " ("
                      << out.positive_rows << " anomalous test rows)\n";
        } else if (train->parsed()) {
            const auto out = dtaad::cmd_train(cfg);
            std::cout << "trained " << out.result.history.size() << " epoch(s), best epoch "
                      << out.result.best_epoch << (out.result.stopped_early ? " (early stop)" : "") << "\n"
                      << "wrote " << out.checkpoint_path << ", " << out.thresholds_path << ", "
                      << out.history_path << "\n";
        } else if (detect->parsed()) {
            const auto out = dtaad::cmd_detect(cfg);
            long long positives = 0;
            for (Eigen::Index t = 0; t < out.labels.aggregated.size(); ++t)
                positives += out.labels.aggregated[t];
            std::cout << "scored " << out.scores.rows() << " timestamps, " << positives
                      << " flagged anomalous\n"
                      << "wrote " << out.scores_path << ", " << out.labels_path << ", " << out.aggregated_path
                      << ", " << out.plot_path << "\n";
        } else if (evaluate->parsed()) {
            const auto out = dtaad::cmd_evaluate(cfg);
            std::cout << dtaad::metrics_to_json(out.report);
            std::cout << "wrote " << out.report_path << "\n";
        }
    } catch (const dtaad::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
