#pragma once

#include <cstdint>
#include <vector>

#include "dtaad/data.hpp"

namespace dtaad {

struct PotConfig {
    double q = 1e-4;             // tail risk probability
    double low_quantile = 1e-3;  // fraction of scores treated as peaks

    void validate() const {
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("pot: q must lie in (0,1)");
        if (!(low_quantile > 0.0 && low_quantile < 1.0))
            throw ConfigError("pot: low quantile must lie in (0,1)");
    }
};

struct InitialThreshold {
    double thr = 0.0;
    long long n_thr = 0;  // count of scores strictly above thr
};

/// GPD tail fit over threshold excesses. gpd_fit fills gamma/beta and the
/// attained log-likelihood; thr, n and n_thr describe the peaks-over-threshold
/// context and are filled by the calibration driver.
struct GpdFit {
    double gamma = 0.0;
    double beta = 0.0;
    double thr = 0.0;
    long long n = 0;
    long long n_thr = 0;
    double log_likelihood = 0.0;
};

/// Nearest-rank upper quantile: the smallest score value such that at most
/// floor(low_quantile * N) scores lie strictly above it.
InitialThreshold initial_threshold(const std::vector<double>& scores, double low_quantile);

/// GPD log-likelihood of positive excesses under (gamma, beta); -inf when the
/// support constraint 1 + gamma*x/beta > 0 fails.
double gpd_log_likelihood(const std::vector<double>& excesses, double gamma, double beta);

/// Maximum-likelihood GPD fit via a Grimshaw-substitution profile scan:
/// ~1000 candidates over a data-driven bracket plus the exponential (gamma->0)
/// limit, with a local refinement around the best grid point. Zero-variance
/// excesses degrade to gamma=0, beta=mean.
GpdFit gpd_fit(const std::vector<double>& excesses);

/// thr_F = thr + (beta/gamma) * ((qN/N_thr)^(-gamma) - 1), with the
/// exponential limit thr + beta*ln(N_thr/(qN)) for |gamma| <= 1e-8. Results
/// below thr are clamped to thr with a warning.
double final_threshold(const GpdFit& fit, double q, long long n_total, bool* clamped = nullptr);

struct DimThreshold {
    double thr = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double thr_f = 0.0;
    long long n = 0;
    long long n_thr = 0;
    bool degenerate = false;  // no peaks above thr; thr_f fell back to thr
};

/// Per-dimension POT calibration over a [T x m] score matrix.
std::vector<DimThreshold> calibrate_thresholds(const MatrixD& scores, const PotConfig& cfg);

struct ThresholdResult {
    MatrixI per_dim;    // y[t,j] = 1 iff score[t,j] >= thr_F[j]
    VectorI aggregated; // D[t] = OR over dimensions
};

ThresholdResult label_and_aggregate(const MatrixD& scores, const std::vector<double>& thr_f);

}  // namespace dtaad
