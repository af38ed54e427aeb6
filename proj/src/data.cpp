#include "dtaad/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtaad/errors.hpp"

namespace dtaad {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
        s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    return s.substr(start);
}

double parse_cell(const std::string& raw, const std::string& path, std::size_t row, std::size_t col) {
    const std::string cell = strip(raw);
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(path + ": non-numeric cell '" + cell + "' at row " + std::to_string(row) + ", column " +
                         std::to_string(col));
    return value;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path, std::size_t& columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file (expected a header row)");
    columns = split_line(strip(line)).size();
    if (columns == 0) throw ParseError(path + ": header row has no columns");

    std::vector<std::vector<double>> rows;
    std::size_t row_index = 1;
    while (std::getline(in, line)) {
        const std::string stripped = strip(line);
        if (stripped.empty()) continue;
        ++row_index;
        const std::vector<std::string> cells = split_line(stripped);
        if (cells.size() != columns)
            throw ParseError(path + ": row " + std::to_string(row_index) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(columns));
        std::vector<double> parsed(columns);
        for (std::size_t c = 0; c < columns; ++c) parsed[c] = parse_cell(cells[c], path, row_index, c + 1);
        rows.push_back(std::move(parsed));
    }
    return rows;
}

std::string base_name(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

template <class M>
void write_csv_impl(const std::string& path, const M& values, const std::vector<std::string>& header,
                    bool integer) {
    if (!header.empty() && static_cast<Eigen::Index>(header.size()) != values.cols())
        throw InvalidArgument("write_csv_matrix: header has " + std::to_string(header.size()) + " names for " +
                              std::to_string(values.cols()) + " columns");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (Eigen::Index c = 0; c < values.cols(); ++c)
        out << (c ? "," : "") << (header.empty() ? "c" + std::to_string(c) : header[static_cast<std::size_t>(c)]);
    out << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (integer)
                std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(values(r, c)));
            else
                std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(values(r, c)));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("short write to " + path);
}

}  // namespace

MatrixF read_csv_matrix(const std::string& path) {
    std::size_t columns = 0;
    const auto rows = read_csv_rows(path, columns);
    MatrixF values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < columns; ++c)
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<float>(rows[r][c]);
    return values;
}

MatrixD read_csv_matrix_d(const std::string& path) {
    std::size_t columns = 0;
    const auto rows = read_csv_rows(path, columns);
    MatrixD values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < columns; ++c)
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return values;
}

MatrixI read_label_csv(const std::string& path) {
    std::size_t columns = 0;
    const auto rows = read_csv_rows(path, columns);
    MatrixI labels(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < columns; ++c) {
            const double v = rows[r][c];
            if (v != 0.0 && v != 1.0)
                throw ParseError(path + ": label value " + std::to_string(v) + " at row " +
                                 std::to_string(r + 2) + ", column " + std::to_string(c + 1) + " is not 0/1");
            labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v != 0.0 ? 1 : 0;
        }
    return labels;
}

RawSeries load_csv(const std::string& path, const std::string& label_path) {
    RawSeries series;
    series.values = read_csv_matrix(path);
    series.name = base_name(path);
    if (!label_path.empty()) {
        series.labels = read_label_csv(label_path);
        if (series.labels.rows() != series.values.rows())
            throw ShapeError(label_path + ": label file has " + std::to_string(series.labels.rows()) +
                             " rows, series has " + std::to_string(series.values.rows()));
        if (series.labels.cols() != 1 && series.labels.cols() != series.values.cols())
            throw ShapeError(label_path + ": label file has " + std::to_string(series.labels.cols()) +
                             " columns, expected 1 or " + std::to_string(series.values.cols()));
    }
    return series;
}

void write_csv_matrix(const std::string& path, const MatrixD& values, const std::vector<std::string>& header) {
    write_csv_impl(path, values, header, false);
}
void write_csv_matrix(const std::string& path, const MatrixF& values, const std::vector<std::string>& header) {
    write_csv_impl(path, values, header, false);
}
void write_csv_matrix(const std::string& path, const MatrixI& values, const std::vector<std::string>& header) {
    write_csv_impl(path, values, header, true);
}

std::pair<MatrixF, NormalizationStats> fit_normalize(const RawSeries& series, float eps) {
    if (series.values.size() == 0) throw InvalidArgument("fit_normalize: empty series");
    if (!(eps > 0.0f)) throw InvalidArgument("fit_normalize: eps must be positive");
    NormalizationStats stats;
    stats.eps = eps;
    stats.min_vec = series.values.colwise().minCoeff().transpose();
    stats.max_vec = series.values.colwise().maxCoeff().transpose();
    return {normalize_with(series.values, stats), stats};
}

MatrixF normalize_with(const MatrixF& values, const NormalizationStats& stats) {
    if (values.cols() != stats.min_vec.size())
        throw ShapeError("normalize_with: series has " + std::to_string(values.cols()) +
                         " dimensions, stats have " + std::to_string(stats.min_vec.size()));
    MatrixF out(values.rows(), values.cols());
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        const float denom = stats.max_vec[c] - stats.min_vec[c] + stats.eps;
        out.col(c) = (values.col(c).array() - stats.min_vec[c]) / denom;
    }
    return out;
}

MatrixF denormalize_with(const MatrixF& normalized, const NormalizationStats& stats) {
    if (normalized.cols() != stats.min_vec.size())
        throw ShapeError("denormalize_with: dimension mismatch");
    MatrixF out(normalized.rows(), normalized.cols());
    for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
        const float denom = stats.max_vec[c] - stats.min_vec[c] + stats.eps;
        out.col(c) = normalized.col(c).array() * denom + stats.min_vec[c];
    }
    return out;
}

MatrixD snr_noise(const MatrixF& signal, double snr_db, Rng& rng) {
    if (!std::isfinite(snr_db)) throw InvalidArgument("snr_noise: snr_db must be finite");
    MatrixD noise(signal.rows(), signal.cols());
    const double ratio = std::pow(10.0, -snr_db / 10.0);
    for (Eigen::Index c = 0; c < signal.cols(); ++c) {
        for (Eigen::Index r = 0; r < signal.rows(); ++r) noise(r, c) = rng.gauss();
        const double signal_power = signal.col(c).cast<double>().squaredNorm();
        if (signal_power == 0.0) {
            noise.col(c).setZero();
            continue;
        }
        const double raw_power = noise.col(c).squaredNorm();
        if (raw_power == 0.0) continue;
        noise.col(c) *= std::sqrt(signal_power * ratio / raw_power);
    }
    return noise;
}

MatrixF add_snr_noise(const MatrixF& signal, const NoiseConfig& cfg) {
    if (!(cfg.attenuation > 0.0)) throw InvalidArgument("add_snr_noise: attenuation must be positive");
    Rng rng(cfg.seed);
    const MatrixD noise = snr_noise(signal, cfg.snr_db, rng);
    return (signal.cast<double>() + noise / cfg.attenuation).cast<float>();
}

WindowedDataset::WindowedDataset(MatrixF normalized, int window_size, MatrixI labels)
    : data_(std::move(normalized)), labels_(std::move(labels)), window_size_(window_size) {
    if (window_size_ < 1) throw InvalidArgument("window size must be >= 1");
    if (labels_.size() > 0 && labels_.rows() != data_.rows())
        throw ShapeError("windowed labels have " + std::to_string(labels_.rows()) + " rows, series has " +
                         std::to_string(data_.rows()));
}

MatrixF WindowedDataset::window(int i) const {
    if (i < 0 || i >= window_count()) throw InvalidArgument("window index out of range");
    MatrixF w(window_size_, data_.cols());
    for (int r = 0; r < window_size_; ++r) {
        const int t = i - window_size_ + 1 + r;
        w.row(r) = data_.row(std::max(t, 0));  // copy fill for t < K
    }
    return w;
}

WindowedDataset make_windows(const MatrixF& normalized, int window_size, MatrixI labels) {
    return WindowedDataset(normalized, window_size, std::move(labels));
}

WindowedDataset subsample_train(const WindowedDataset& ds, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw InvalidArgument("subsample_train: fraction must lie in (0,1], got " + std::to_string(fraction));
    const int keep =
        std::min<int>(ds.window_count(), static_cast<int>(std::ceil(fraction * ds.window_count())));
    MatrixI labels;
    if (ds.has_labels()) labels = ds.labels().topRows(keep);
    return WindowedDataset(ds.data().topRows(keep), ds.window_size(), std::move(labels));
}

MatrixI broadcast_labels(const MatrixI& labels, int dims) {
    if (labels.cols() == dims) return labels;
    if (labels.cols() != 1)
        throw ShapeError("broadcast_labels: cannot broadcast " + std::to_string(labels.cols()) + " columns to " +
                         std::to_string(dims));
    MatrixI out(labels.rows(), dims);
    for (int c = 0; c < dims; ++c) out.col(c) = labels.col(0);
    return out;
}

VectorI entity_labels(const MatrixI& labels) {
    VectorI out = VectorI::Zero(labels.rows());
    for (Eigen::Index r = 0; r < labels.rows(); ++r)
        out[r] = labels.row(r).maxCoeff() > 0 ? 1 : 0;
    return out;
}

std::pair<RawSeries, RawSeries> split_series(const RawSeries& series, double train_fraction) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw InvalidArgument("split_series: train fraction must lie in (0,1)");
    const Eigen::Index t = series.values.rows();
    const Eigen::Index cut = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(train_fraction * t));
    RawSeries train, test;
    train.name = series.name + ".train";
    test.name = series.name + ".test";
    train.values = series.values.topRows(cut);
    test.values = series.values.bottomRows(t - cut);
    if (series.has_labels()) {
        train.labels = series.labels.topRows(cut);
        test.labels = series.labels.bottomRows(t - cut);
    }
    return {train, test};
}

}  // namespace dtaad
