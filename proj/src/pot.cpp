#include "dtaad/pot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dtaad/threads.hpp"

namespace dtaad {

namespace {

struct ProfilePoint {
    double t = 0.0;  // Grimshaw substitution variable gamma/beta
    double gamma = 0.0;
    double beta = 0.0;
    double log_lik = -std::numeric_limits<double>::infinity();
};

/// Profile log-likelihood at t: gamma(t) = mean(log1p(t*x)), beta = gamma/t,
/// ll = -n*log(beta) - n*(1 + gamma).
std::optional<ProfilePoint> profile_at(const std::vector<double>& x, double x_max, double t) {
    if (t == 0.0) return std::nullopt;
    if (t < 0.0 && t * x_max <= -1.0) return std::nullopt;
    double mean_log = 0.0;
    for (double v : x) mean_log += std::log1p(t * v);
    mean_log /= static_cast<double>(x.size());
    if (mean_log == 0.0) return std::nullopt;
    const double beta = mean_log / t;
    if (!(beta > 0.0)) return std::nullopt;
    ProfilePoint p;
    p.t = t;
    p.gamma = mean_log;
    p.beta = beta;
    p.log_lik = -static_cast<double>(x.size()) * std::log(beta) -
                static_cast<double>(x.size()) * (1.0 + mean_log);
    return p;
}

}  // namespace

InitialThreshold initial_threshold(const std::vector<double>& scores, double low_quantile) {
    if (scores.empty()) throw InvalidArgument("initial_threshold: empty score series");
    if (!(low_quantile > 0.0 && low_quantile < 1.0))
        throw InvalidArgument("initial_threshold: low quantile must lie in (0,1)");
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const auto n = static_cast<long long>(sorted.size());
    const long long allowed = static_cast<long long>(low_quantile * static_cast<double>(n));
    InitialThreshold result;
    result.thr = sorted[static_cast<std::size_t>(std::min(allowed, n - 1))];
    result.n_thr = static_cast<long long>(
        std::count_if(scores.begin(), scores.end(), [&](double s) { return s > result.thr; }));
    return result;
}

double gpd_log_likelihood(const std::vector<double>& excesses, double gamma, double beta) {
    if (!(beta > 0.0)) return -std::numeric_limits<double>::infinity();
    const auto n = static_cast<double>(excesses.size());
    if (gamma == 0.0) {
        double sum = 0.0;
        for (double x : excesses) sum += x;
        return -n * std::log(beta) - sum / beta;
    }
    double sum_log = 0.0;
    for (double x : excesses) {
        const double u = 1.0 + gamma * x / beta;
        if (!(u > 0.0)) return -std::numeric_limits<double>::infinity();
        sum_log += std::log(u);
    }
    return -n * std::log(beta) - (1.0 + 1.0 / gamma) * sum_log;
}

GpdFit gpd_fit(const std::vector<double>& excesses) {
    if (excesses.empty()) throw NumericError("gpd_fit: no peaks above the initial threshold");
    const auto n = static_cast<double>(excesses.size());
    double x_min = excesses[0], x_max = excesses[0], mean = 0.0;
    for (double x : excesses) {
        if (!(x > 0.0)) throw InvalidArgument("gpd_fit: excesses must be strictly positive");
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        mean += x;
    }
    mean /= n;

    GpdFit fit;
    fit.n_thr = static_cast<long long>(excesses.size());
    fit.gamma = 0.0;
    fit.beta = mean;
    fit.log_likelihood = -n * std::log(mean) - n;  // exponential-limit candidate
    if (x_max == x_min) return fit;                // zero-variance excesses

    // Candidate grid for t = gamma/beta: 500 log-spaced points per sign.
    // Positive side spans 1e-8/mean .. 1e4/mean; negative side t = -s/x_max
    // with s log-spaced in (1e-8, 1), respecting the support bound t > -1/x_max.
    constexpr int kHalfGrid = 500;
    std::vector<double> ts;
    ts.reserve(2 * kHalfGrid);
    for (int i = 0; i < kHalfGrid; ++i) {
        const double expo = -8.0 + 12.0 * i / (kHalfGrid - 1);
        ts.push_back(std::pow(10.0, expo) / mean);
    }
    for (int i = 0; i < kHalfGrid; ++i) {
        const double expo = -8.0 * (1.0 - static_cast<double>(i) / (kHalfGrid - 1));
        const double s = std::pow(10.0, expo) * (1.0 - 1e-9);
        ts.push_back(-s / x_max);
    }

    ProfilePoint best;
    int best_index = -1;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto p = profile_at(excesses, x_max, ts[i]);
        if (p && p->log_lik > best.log_lik) {
            best = *p;
            best_index = static_cast<int>(i);
        }
    }

    if (best_index >= 0 && best.log_lik > fit.log_likelihood) {
        // Golden-section refinement between the grid neighbours of the best
        // candidate (same sign side of the grid).
        const int side_begin = best_index < kHalfGrid ? 0 : kHalfGrid;
        const int side_end = best_index < kHalfGrid ? kHalfGrid : 2 * kHalfGrid;
        double lo = best_index > side_begin ? ts[static_cast<std::size_t>(best_index - 1)] : best.t;
        double hi = best_index < side_end - 1 ? ts[static_cast<std::size_t>(best_index + 1)] : best.t;
        if (lo > hi) std::swap(lo, hi);
        constexpr double kGolden = 0.6180339887498949;
        double a = lo, b = hi;
        double c = b - kGolden * (b - a);
        double d = a + kGolden * (b - a);
        for (int iter = 0; iter < 80 && b - a > 1e-14 * (std::abs(a) + std::abs(b) + 1e-300); ++iter) {
            const auto pc = profile_at(excesses, x_max, c);
            const auto pd = profile_at(excesses, x_max, d);
            const double lc = pc ? pc->log_lik : -std::numeric_limits<double>::infinity();
            const double ld = pd ? pd->log_lik : -std::numeric_limits<double>::infinity();
            if (lc > ld)
                b = d;
            else
                a = c;
            c = b - kGolden * (b - a);
            d = a + kGolden * (b - a);
        }
        const auto refined = profile_at(excesses, x_max, 0.5 * (a + b));
        if (refined && refined->log_lik > best.log_lik) best = *refined;
        if (best.log_lik > fit.log_likelihood) {
            fit.gamma = best.gamma;
            fit.beta = best.beta;
            fit.log_likelihood = best.log_lik;
        }
    }
    return fit;
}

double final_threshold(const GpdFit& fit, double q, long long n_total, bool* clamped) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("final_threshold: q must lie in (0,1)");
    if (fit.n_thr < 1) throw InvalidArgument("final_threshold: fit has no peaks");
    if (n_total < 1) throw InvalidArgument("final_threshold: total count must be positive");
    const double u = q * static_cast<double>(n_total) / static_cast<double>(fit.n_thr);
    double thr_f;
    if (std::abs(fit.gamma) > 1e-8)
        thr_f = fit.thr + fit.beta / fit.gamma * (std::pow(u, -fit.gamma) - 1.0);
    else
        thr_f = fit.thr + fit.beta * std::log(1.0 / u);
    if (clamped != nullptr) *clamped = false;
    if (thr_f < fit.thr) {
        warn("final_threshold: correction fell below the initial threshold (q*N >= N_thr); clamping");
        if (clamped != nullptr) *clamped = true;
        return fit.thr;
    }
    return thr_f;
}

std::vector<DimThreshold> calibrate_thresholds(const MatrixD& scores, const PotConfig& cfg) {
    cfg.validate();
    if (scores.size() == 0) throw InvalidArgument("calibrate_thresholds: empty score matrix");
    const auto dims = static_cast<int>(scores.cols());
    const auto n = static_cast<long long>(scores.rows());
    std::vector<DimThreshold> result(static_cast<std::size_t>(dims));
    parallel_for(dims, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t j = begin; j < end; ++j) {
            std::vector<double> column(static_cast<std::size_t>(scores.rows()));
            for (Eigen::Index r = 0; r < scores.rows(); ++r)
                column[static_cast<std::size_t>(r)] = scores(r, j);
            const InitialThreshold init = initial_threshold(column, cfg.low_quantile);
            DimThreshold dim;
            dim.thr = init.thr;
            dim.n = n;
            dim.n_thr = init.n_thr;
            if (init.n_thr < 1) {
                dim.degenerate = true;  // no peaks: fall back to the initial threshold
                dim.thr_f = init.thr;
            } else {
                std::vector<double> excesses;
                excesses.reserve(static_cast<std::size_t>(init.n_thr));
                for (double s : column)
                    if (s > init.thr) excesses.push_back(s - init.thr);
                GpdFit fit = gpd_fit(excesses);
                fit.thr = init.thr;
                fit.n = n;
                fit.n_thr = init.n_thr;
                dim.gamma = fit.gamma;
                dim.beta = fit.beta;
                dim.thr_f = final_threshold(fit, cfg.q, n);
            }
            result[static_cast<std::size_t>(j)] = dim;
        }
    });
    return result;
}

ThresholdResult label_and_aggregate(const MatrixD& scores, const std::vector<double>& thr_f) {
    if (static_cast<Eigen::Index>(thr_f.size()) != scores.cols())
        throw InvalidArgument("label_and_aggregate: " + std::to_string(thr_f.size()) + " thresholds for " +
                              std::to_string(scores.cols()) + " score dimensions");
    ThresholdResult result;
    result.per_dim.resize(scores.rows(), scores.cols());
    result.aggregated = VectorI::Zero(scores.rows());
    for (Eigen::Index t = 0; t < scores.rows(); ++t) {
        int any = 0;
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            const int y = scores(t, j) >= thr_f[static_cast<std::size_t>(j)] ? 1 : 0;
            result.per_dim(t, j) = y;
            any |= y;
        }
        result.aggregated[t] = any;
    }
    return result;
}

}  // namespace dtaad
