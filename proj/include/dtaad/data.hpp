#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dtaad/rng.hpp"
#include "dtaad/tensor.hpp"

namespace dtaad {

using MatrixI = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorI = Eigen::Matrix<int, Eigen::Dynamic, 1>;

/// One multivariate series: rows are timestamps, columns dimensions. Labels,
/// when present, have the same row count and one column (entity-level) or one
/// column per dimension, entries in {0,1}.
struct RawSeries {
    MatrixF values;
    MatrixI labels;
    std::string name;

    bool has_labels() const { return labels.size() > 0; }
    int timestamps() const { return static_cast<int>(values.rows()); }
    int dims() const { return static_cast<int>(values.cols()); }
};

struct NormalizationStats {
    VectorF min_vec;
    VectorF max_vec;
    float eps = 1e-9f;
};

struct NoiseConfig {
    double snr_db = 50.0;
    double attenuation = 100.0;
    std::uint64_t seed = 0;
    bool apply_to_test = false;
};

/// Reads a numeric CSV with a header row; one row per timestamp.
MatrixF read_csv_matrix(const std::string& path);
MatrixD read_csv_matrix_d(const std::string& path);

/// Reads a 0/1 label CSV (header row; 1 or more columns).
MatrixI read_label_csv(const std::string& path);

/// read_csv_matrix plus optional 0/1 label CSV with matching row count.
RawSeries load_csv(const std::string& path, const std::string& label_path = "");

void write_csv_matrix(const std::string& path, const MatrixD& values,
                      const std::vector<std::string>& header);
void write_csv_matrix(const std::string& path, const MatrixF& values,
                      const std::vector<std::string>& header);
void write_csv_matrix(const std::string& path, const MatrixI& values,
                      const std::vector<std::string>& header);

/// Min-max scaling x -> (x - min)/(max - min + eps), fitted per dimension.
/// Fit on the training split only and reuse the stats for test data.
std::pair<MatrixF, NormalizationStats> fit_normalize(const RawSeries& series, float eps = 1e-9f);
MatrixF normalize_with(const MatrixF& values, const NormalizationStats& stats);
MatrixF denormalize_with(const MatrixF& normalized, const NormalizationStats& stats);

/// Gaussian noise rescaled per dimension so that sum(eps^2) equals
/// sum(x^2) * 10^(-snr_db/10) exactly. All-zero columns get zero noise.
MatrixD snr_noise(const MatrixF& signal, double snr_db, Rng& rng);

/// signal + snr_noise(signal)/attenuation.
MatrixF add_snr_noise(const MatrixF& signal, const NoiseConfig& cfg);

/// Sliding windows over a normalized series: one window per timestamp, early
/// windows copy-fill missing history with the first observation. The target of
/// window t is the observation at t (the window's last row).
class WindowedDataset {
public:
    WindowedDataset() = default;
    WindowedDataset(MatrixF normalized, int window_size, MatrixI labels = {});

    int window_count() const { return static_cast<int>(data_.rows()); }
    int dims() const { return static_cast<int>(data_.cols()); }
    int window_size() const { return window_size_; }
    bool has_labels() const { return labels_.size() > 0; }

    MatrixF window(int i) const;
    Eigen::Matrix<float, 1, Eigen::Dynamic> target(int i) const { return data_.row(i); }

    const MatrixF& data() const { return data_; }
    const MatrixI& labels() const { return labels_; }

private:
    MatrixF data_;
    MatrixI labels_;
    int window_size_ = 0;
};

WindowedDataset make_windows(const MatrixF& normalized, int window_size, MatrixI labels = {});

/// Keeps the leading ceil(fraction * N) windows (contiguous temporal prefix).
WindowedDataset subsample_train(const WindowedDataset& ds, double fraction);

/// Entity-level labels broadcast to per-dimension form.
MatrixI broadcast_labels(const MatrixI& labels, int dims);

/// OR-reduction across label columns.
VectorI entity_labels(const MatrixI& labels);

/// Temporal split for datasets that ship unsplit (e.g. leading 80% train).
std::pair<RawSeries, RawSeries> split_series(const RawSeries& series, double train_fraction);

}  // namespace dtaad
