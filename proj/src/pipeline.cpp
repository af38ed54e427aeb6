#include "dtaad/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dtaad/threads.hpp"

namespace dtaad {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kTrainNoiseStream = 0x4e4f4953ull;
constexpr std::uint64_t kTestNoiseStream = 0x4e4f4954ull;

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string(what) + " path is not set");
    if (!fs::exists(path)) throw ConfigError(std::string(what) + " path does not exist: " + path);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::vector<std::string> dim_header(const std::string& stem, int dims) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(dims));
    for (int j = 0; j < dims; ++j) names.push_back(stem + "_" + std::to_string(j));
    return names;
}

json model_to_json(const DtaadConfig& m) {
    return json{{"window", m.window},
                {"dims", m.dims},
                {"lambda", m.lambda},
                {"encoder_layers", m.encoder_layers},
                {"ffn_hidden", m.ffn_hidden},
                {"heads", m.heads},
                {"dropout", m.dropout},
                {"leak", m.leak},
                {"layer_norm_eps", m.layer_norm_eps},
                {"feedback_at_inference", m.feedback_at_inference},
                {"use_local_tcn", m.use_local_tcn},
                {"use_global_tcn", m.use_global_tcn},
                {"local", {{"kernel", m.local_tcn.kernel_size}, {"layers", m.local_tcn.num_layers}}},
                {"global",
                 {{"kernel", m.global_tcn.kernel_size},
                  {"base", m.global_tcn.dilation_base},
                  {"layers", m.global_tcn.num_layers}}}};
}

DtaadConfig model_from_json(const json& j) {
    DtaadConfig m;
    m.window = j.at("window").get<int>();
    m.dims = j.at("dims").get<int>();
    m.lambda = j.at("lambda").get<double>();
    m.encoder_layers = j.at("encoder_layers").get<int>();
    m.ffn_hidden = j.at("ffn_hidden").get<int>();
    m.heads = j.at("heads").get<int>();
    m.dropout = j.at("dropout").get<double>();
    m.leak = j.at("leak").get<double>();
    m.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    m.feedback_at_inference = j.at("feedback_at_inference").get<bool>();
    m.use_local_tcn = j.at("use_local_tcn").get<bool>();
    m.use_global_tcn = j.at("use_global_tcn").get<bool>();
    m.local_tcn.kernel_size = j.at("local").at("kernel").get<int>();
    m.local_tcn.num_layers = j.at("local").at("layers").get<int>();
    m.global_tcn.kernel_size = j.at("global").at("kernel").get<int>();
    m.global_tcn.dilation_base = j.at("global").at("base").get<int>();
    m.finalize();
    if (m.global_tcn.num_layers != j.at("global").at("layers").get<int>())
        m.global_tcn.num_layers = j.at("global").at("layers").get<int>();
    return m;
}

json thresholds_to_json(const std::vector<DimThreshold>& thresholds) {
    json arr = json::array();
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
        const DimThreshold& d = thresholds[j];
        arr.push_back(json{{"dim", j},
                           {"thr", d.thr},
                           {"gamma", d.gamma},
                           {"beta", d.beta},
                           {"thr_f", d.thr_f},
                           {"n", d.n},
                           {"n_thr", d.n_thr},
                           {"degenerate", d.degenerate}});
    }
    return arr;
}

std::vector<DimThreshold> thresholds_from_json(const json& arr) {
    std::vector<DimThreshold> out;
    for (const json& e : arr) {
        DimThreshold d;
        d.thr = e.at("thr").get<double>();
        d.gamma = e.at("gamma").get<double>();
        d.beta = e.at("beta").get<double>();
        d.thr_f = e.at("thr_f").get<double>();
        d.n = e.at("n").get<long long>();
        d.n_thr = e.at("n_thr").get<long long>();
        d.degenerate = e.at("degenerate").get<bool>();
        out.push_back(d);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("short write to " + path);
}

}  // namespace

MatrixD score_windows(const DtaadConfig& cfg, const DtaadParams<float>& params, const WindowedDataset& ds) {
    MatrixD scores(ds.window_count(), ds.dims());
    parallel_for(ds.window_count(), [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            const InferenceResult<float> r = forward_inference(cfg, params, ds.window(static_cast<int>(i)));
            scores.row(i) = r.scores.cast<double>().transpose();
        }
    });
    return scores;
}

SynthOutputs cmd_synth(const RunConfig& cfg) {
    SyntheticSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    spec.validate();
    ensure_out_dir(cfg.out_dir);
    const SyntheticData data = generate_synthetic(spec);
    SynthOutputs out;
    out.train_path = cfg.out_dir + "/train.csv";
    out.test_path = cfg.out_dir + "/test.csv";
    out.labels_path = cfg.out_dir + "/test_labels.csv";
    write_csv_matrix(out.train_path, data.train, dim_header("dim", spec.dims));
    write_csv_matrix(out.test_path, data.test, dim_header("dim", spec.dims));
    write_csv_matrix(out.labels_path, data.test_labels, dim_header("label", spec.dims));
    for (Eigen::Index t = 0; t < data.test_labels.rows(); ++t)
        if (data.test_labels.row(t).maxCoeff() > 0) ++out.positive_rows;
    return out;
}

Checkpoint build_model_checkpoint(const DtaadConfig& model, const TrainResult& result,
                                  const NormalizationStats& stats, const std::vector<DimThreshold>& thresholds,
                                  const PotConfig& pot, const NoiseConfig& noise, std::uint64_t seed) {
    json meta;
    meta["format_version"] = kCheckpointVersion;
    meta["model"] = model_to_json(model);
    meta["seed"] = seed;
    meta["best_epoch"] = result.best_epoch;
    meta["epochs_run"] = result.history.size();
    meta["stopped_early"] = result.stopped_early;
    json hist = json::array();
    for (const EpochStats& e : result.history)
        hist.push_back(json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                            {"lr", e.lr}});
    meta["loss_history"] = hist;
    meta["adam_step"] = result.opt_state.step;
    std::vector<double> mins(stats.min_vec.data(), stats.min_vec.data() + stats.min_vec.size());
    std::vector<double> maxs(stats.max_vec.data(), stats.max_vec.data() + stats.max_vec.size());
    meta["normalization"] = json{{"min", mins}, {"max", maxs}, {"eps", stats.eps}};
    meta["thresholds"] = thresholds_to_json(thresholds);
    meta["pot"] = json{{"q", pot.q}, {"low_quantile", pot.low_quantile}};
    meta["noise"] = json{{"snr_db", noise.snr_db},
                         {"attenuation", noise.attenuation},
                         {"apply_to_test", noise.apply_to_test}};

    Checkpoint ckpt;
    ckpt.metadata = meta.dump();
    ckpt.arrays = params_to_arrays(result.params, "param.");
    if (result.opt_state.m.size() > 0) {
        ckpt.arrays.push_back({"adam.m", {static_cast<int>(result.opt_state.m.size())}, result.opt_state.m});
        ckpt.arrays.push_back({"adam.v", {static_cast<int>(result.opt_state.v.size())}, result.opt_state.v});
    }
    return ckpt;
}

LoadedModel load_model_checkpoint(const std::string& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    json meta;
    try {
        meta = json::parse(ckpt.metadata);
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": corrupt metadata block: " + e.what());
    }
    LoadedModel lm;
    try {
        lm.model = model_from_json(meta.at("model"));
        lm.seed = meta.at("seed").get<std::uint64_t>();
        lm.best_epoch = meta.at("best_epoch").get<int>();
        lm.epochs_run = meta.at("epochs_run").get<int>();
        for (const json& e : meta.at("loss_history"))
            lm.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                                  e.at("val_loss").get<double>(), e.at("lr").get<double>()});
        const json& norm = meta.at("normalization");
        const auto mins = norm.at("min").get<std::vector<double>>();
        const auto maxs = norm.at("max").get<std::vector<double>>();
        lm.stats.min_vec.resize(static_cast<Eigen::Index>(mins.size()));
        lm.stats.max_vec.resize(static_cast<Eigen::Index>(maxs.size()));
        for (std::size_t i = 0; i < mins.size(); ++i) {
            lm.stats.min_vec[static_cast<Eigen::Index>(i)] = static_cast<float>(mins[i]);
            lm.stats.max_vec[static_cast<Eigen::Index>(i)] = static_cast<float>(maxs[i]);
        }
        lm.stats.eps = norm.at("eps").get<float>();
        lm.thresholds = thresholds_from_json(meta.at("thresholds"));
        lm.pot.q = meta.at("pot").at("q").get<double>();
        lm.pot.low_quantile = meta.at("pot").at("low_quantile").get<double>();
        lm.noise.snr_db = meta.at("noise").at("snr_db").get<double>();
        lm.noise.attenuation = meta.at("noise").at("attenuation").get<double>();
        lm.noise.apply_to_test = meta.at("noise").at("apply_to_test").get<bool>();
        lm.opt_state.step = meta.at("adam_step").get<long long>();
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": metadata is missing fields: " + e.what());
    }
    lm.params = arrays_to_params(ckpt, lm.model, "param.");
    if (const NamedArray* m = ckpt.find("adam.m")) lm.opt_state.m = m->values;
    if (const NamedArray* v = ckpt.find("adam.v")) lm.opt_state.v = v->values;
    return lm;
}

TrainOutputs cmd_train(const RunConfig& cfg) {
    require_file(cfg.train_path, "training dataset");
    ensure_out_dir(cfg.out_dir);

    RawSeries series = load_csv(cfg.train_path);
    if (cfg.split_fraction > 0.0) series = split_series(series, cfg.split_fraction).first;

    auto [normalized, stats] = fit_normalize(series);
    NoiseConfig noise = cfg.noise;
    noise.seed = mix_seed(cfg.seed, {kTrainNoiseStream});
    const MatrixF noised = add_snr_noise(normalized, noise);

    DtaadConfig model = cfg.model;
    model.dims = series.dims();
    model.finalize();
    model.validate();

    WindowedDataset ds = make_windows(noised, model.window);
    if (cfg.train_fraction < 1.0) ds = subsample_train(ds, cfg.train_fraction);

    TrainerConfig trainer_cfg = cfg.trainer;
    trainer_cfg.seed = cfg.seed;
    trainer_cfg.validate();

    TrainOutputs out;
    out.model = model;
    out.stats = stats;
    out.result = train(model, ds, trainer_cfg);

    const MatrixD train_scores = score_windows(model, out.result.params, ds);
    out.thresholds = calibrate_thresholds(train_scores, cfg.pot);

    out.checkpoint_path = cfg.resolved_checkpoint();
    save_checkpoint(out.checkpoint_path,
                    build_model_checkpoint(model, out.result, stats, out.thresholds, cfg.pot, cfg.noise,
                                           cfg.seed));

    out.thresholds_path = cfg.out_dir + "/thresholds.json";
    write_text(out.thresholds_path, thresholds_to_json(out.thresholds).dump(2) + "\n");

    out.history_path = cfg.out_dir + "/loss_history.csv";
    MatrixD hist(static_cast<Eigen::Index>(out.result.history.size()), 4);
    for (std::size_t i = 0; i < out.result.history.size(); ++i) {
        const EpochStats& e = out.result.history[i];
        hist(static_cast<Eigen::Index>(i), 0) = e.epoch;
        hist(static_cast<Eigen::Index>(i), 1) = e.train_loss;
        hist(static_cast<Eigen::Index>(i), 2) = e.val_loss;
        hist(static_cast<Eigen::Index>(i), 3) = e.lr;
    }
    write_csv_matrix(out.history_path, hist, {"epoch", "train_loss", "val_loss", "lr"});
    return out;
}

DetectOutputs cmd_detect(const RunConfig& cfg) {
    require_file(cfg.resolved_checkpoint(), "checkpoint");
    require_file(cfg.test_path, "test dataset");
    ensure_out_dir(cfg.out_dir);

    const LoadedModel lm = load_model_checkpoint(cfg.resolved_checkpoint());
    RawSeries series = load_csv(cfg.test_path);
    if (cfg.split_fraction > 0.0) series = split_series(series, cfg.split_fraction).second;
    if (series.dims() != lm.model.dims)
        throw InvalidArgument("detect: test data has " + std::to_string(series.dims()) +
                              " dimensions, checkpoint expects " + std::to_string(lm.model.dims));

    MatrixF normalized = normalize_with(series.values, lm.stats);
    if (lm.noise.apply_to_test) {
        NoiseConfig noise = lm.noise;
        noise.seed = mix_seed(cfg.seed, {kTestNoiseStream});
        normalized = add_snr_noise(normalized, noise);
    }

    DtaadConfig model = lm.model;
    model.feedback_at_inference = cfg.model.feedback_at_inference;
    const WindowedDataset ds = make_windows(normalized, model.window);

    DetectOutputs out;
    out.scores = score_windows(model, lm.params, ds);
    std::vector<double> thr_f;
    thr_f.reserve(lm.thresholds.size());
    for (const DimThreshold& d : lm.thresholds) thr_f.push_back(d.thr_f);
    out.labels = label_and_aggregate(out.scores, thr_f);

    const int m = lm.model.dims;
    out.scores_path = cfg.out_dir + "/scores.csv";
    write_csv_matrix(out.scores_path, out.scores, dim_header("score", m));
    out.labels_path = cfg.out_dir + "/labels.csv";
    write_csv_matrix(out.labels_path, out.labels.per_dim, dim_header("label", m));
    out.aggregated_path = cfg.out_dir + "/labels_agg.csv";
    MatrixI agg(out.labels.aggregated.size(), 1);
    agg.col(0) = out.labels.aggregated;
    write_csv_matrix(out.aggregated_path, agg, {"anomaly"});

    // Plot data: per-timestamp score against the (constant) threshold, per dim.
    out.plot_path = cfg.out_dir + "/plotdata.csv";
    MatrixD plot(out.scores.rows(), 1 + 2 * m);
    std::vector<std::string> plot_header{"t"};
    for (int j = 0; j < m; ++j) {
        plot_header.push_back("score_" + std::to_string(j));
        plot_header.push_back("thr_" + std::to_string(j));
    }
    for (Eigen::Index t = 0; t < out.scores.rows(); ++t) {
        plot(t, 0) = static_cast<double>(t);
        for (int j = 0; j < m; ++j) {
            plot(t, 1 + 2 * j) = out.scores(t, j);
            plot(t, 2 + 2 * j) = thr_f[static_cast<std::size_t>(j)];
        }
    }
    write_csv_matrix(out.plot_path, plot, plot_header);
    return out;
}

std::string metrics_to_json(const MetricsReport& report) {
    json j;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["auc"] = report.auc;
    if (report.has_diagnosis) {
        for (const auto& [p, v] : report.hitrate) j["hitrate@" + std::to_string(p)] = v;
        for (const auto& [p, v] : report.ndcg) j["ndcg@" + std::to_string(p)] = v;
    }
    j["confusion"] = json{{"tp", report.counts.tp},
                          {"fp", report.counts.fp},
                          {"fn", report.counts.fn},
                          {"tn", report.counts.tn}};
    j["runtime_seconds"] = report.runtime_seconds;
    return j.dump(2) + "\n";
}

EvaluateOutputs cmd_evaluate(const RunConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    require_file(cfg.scores_path, "score file");
    require_file(cfg.pred_path, "predicted label file");
    require_file(cfg.labels_path, "ground-truth label file");
    ensure_out_dir(cfg.out_dir);

    const MatrixD scores = read_csv_matrix_d(cfg.scores_path);
    const MatrixI pred_matrix = read_label_csv(cfg.pred_path);
    const MatrixI truth_matrix = read_label_csv(cfg.labels_path);
    if (pred_matrix.rows() != scores.rows() || truth_matrix.rows() != scores.rows())
        throw ShapeError("evaluate: scores have " + std::to_string(scores.rows()) + " rows, predictions " +
                         std::to_string(pred_matrix.rows()) + ", truth " + std::to_string(truth_matrix.rows()));

    const VectorI pred_vec = entity_labels(pred_matrix);
    const VectorI truth_vec = entity_labels(truth_matrix);
    std::vector<int> pred(pred_vec.data(), pred_vec.data() + pred_vec.size());
    std::vector<int> truth(truth_vec.data(), truth_vec.data() + truth_vec.size());
    if (cfg.use_point_adjust) pred = point_adjust(pred, truth);

    MetricsReport report;
    const PrfResult prf = precision_recall_f1(pred, truth);
    report.precision = prf.precision;
    report.recall = prf.recall;
    report.f1 = prf.f1;
    report.counts = prf.counts;

    std::vector<double> mean_scores(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index t = 0; t < scores.rows(); ++t) mean_scores[static_cast<std::size_t>(t)] = scores.row(t).mean();
    report.auc = roc_auc(mean_scores, truth);

    if (truth_matrix.cols() == scores.cols() && scores.cols() > 1) {
        DiagnosisRanking ranking;
        for (Eigen::Index t = 0; t < scores.rows(); ++t) {
            if (truth_matrix.row(t).maxCoeff() == 0) continue;
            DiagnosisTimestamp ts;
            ts.scores.assign(scores.row(t).data(), scores.row(t).data() + scores.cols());
            for (Eigen::Index j = 0; j < truth_matrix.cols(); ++j)
                if (truth_matrix(t, j) != 0) ts.true_dims.push_back(static_cast<int>(j));
            ranking.push_back(std::move(ts));
        }
        if (!ranking.empty()) {
            report.has_diagnosis = true;
            for (int p : {100, 150}) {
                report.hitrate[p] = hitrate_at_p(ranking, p);
                report.ndcg[p] = ndcg_at_p(ranking, p);
            }
        }
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EvaluateOutputs out;
    out.report = report;
    out.report_path = cfg.out_dir + "/metrics.json";
    write_text(out.report_path, metrics_to_json(report));
    return out;
}

}  // namespace dtaad
