#pragma once

#include <string>
#include <vector>

#include "dtaad/checkpoint.hpp"
#include "dtaad/metrics.hpp"
#include "dtaad/pot.hpp"
#include "dtaad/synth.hpp"
#include "dtaad/trainer.hpp"

namespace dtaad {

/// Everything a batch run needs: dataset paths plus all module configurations.
/// Defaults follow the shipped hyperparameters wherever one is specified.
struct RunConfig {
    std::string train_path;
    std::string test_path;
    std::string labels_path;      // ground-truth labels (evaluate)
    std::string scores_path;      // score CSV (evaluate)
    std::string pred_path;        // predicted aggregated labels (evaluate)
    std::string checkpoint_path;  // empty: <out>/checkpoint.dtad
    std::string out_dir = ".";
    std::uint64_t seed = 42;
    double train_fraction = 1.0;  // leading fraction of training windows kept
    double split_fraction = 0.0;  // >0: temporal train/test split of --train / --test files
    DtaadConfig model;
    TrainerConfig trainer;
    NoiseConfig noise;
    PotConfig pot;
    bool use_point_adjust = false;
    SyntheticSpec synth;

    std::string resolved_checkpoint() const {
        return checkpoint_path.empty() ? out_dir + "/checkpoint.dtad" : checkpoint_path;
    }
};

struct SynthOutputs {
    std::string train_path, test_path, labels_path;
    long long positive_rows = 0;
};

struct TrainOutputs {
    std::string checkpoint_path, thresholds_path, history_path;
    TrainResult result;
    std::vector<DimThreshold> thresholds;
    NormalizationStats stats;
    DtaadConfig model;
};

struct DetectOutputs {
    std::string scores_path, labels_path, aggregated_path, plot_path;
    MatrixD scores;
    ThresholdResult labels;
};

struct EvaluateOutputs {
    std::string report_path;
    MetricsReport report;
};

SynthOutputs cmd_synth(const RunConfig& cfg);
TrainOutputs cmd_train(const RunConfig& cfg);
DetectOutputs cmd_detect(const RunConfig& cfg);
EvaluateOutputs cmd_evaluate(const RunConfig& cfg);

/// Per-window inference scores over a whole dataset, [T x m].
MatrixD score_windows(const DtaadConfig& cfg, const DtaadParams<float>& params, const WindowedDataset& ds);

/// Model state rehydrated from a checkpoint file.
struct LoadedModel {
    DtaadConfig model;
    DtaadParams<float> params;
    AdamState<float> opt_state;
    NormalizationStats stats;
    std::vector<DimThreshold> thresholds;
    NoiseConfig noise;
    PotConfig pot;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    int epochs_run = 0;
    std::uint64_t seed = 0;
};

Checkpoint build_model_checkpoint(const DtaadConfig& model, const TrainResult& result,
                                  const NormalizationStats& stats, const std::vector<DimThreshold>& thresholds,
                                  const PotConfig& pot, const NoiseConfig& noise, std::uint64_t seed);
LoadedModel load_model_checkpoint(const std::string& path);

std::string metrics_to_json(const MetricsReport& report);

}  // namespace dtaad
