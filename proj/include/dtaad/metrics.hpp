#pragma once

#include <map>
#include <vector>

#include "dtaad/data.hpp"

namespace dtaad {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
};

struct PrfResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    ConfusionCounts counts;
};

/// Point-wise precision/recall/F1; zero-division cases return 0.
PrfResult precision_recall_f1(const std::vector<int>& pred, const std::vector<int>& truth);

/// Mann-Whitney AUC: fraction of (positive, negative) pairs where the positive
/// scores higher, ties counted 0.5. Exact (integer pair accounting).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth);

/// One anomalous timestamp for diagnosis: per-dimension scores plus the set of
/// truly anomalous dimensions (non-empty for evaluated timestamps).
struct DiagnosisTimestamp {
    std::vector<double> scores;
    std::vector<int> true_dims;
};
using DiagnosisRanking = std::vector<DiagnosisTimestamp>;

/// Top floor(g*p/100) dimensions by score (ties broken by dimension index);
/// hit fraction |hits|/g averaged over timestamps with non-empty ground truth.
double hitrate_at_p(const DiagnosisRanking& ranking, double p);

/// Binary-relevance NDCG over the same cutoff as hitrate_at_p.
double ndcg_at_p(const DiagnosisRanking& ranking, double p);

/// Literature-style segment adjustment: any hit inside a contiguous true
/// anomaly segment marks the whole segment as predicted.
std::vector<int> point_adjust(const std::vector<int>& pred, const std::vector<int>& truth);

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    std::map<int, double> hitrate;  // keyed by P%
    std::map<int, double> ndcg;
    ConfusionCounts counts;
    double runtime_seconds = 0.0;
    bool has_diagnosis = false;
};

}  // namespace dtaad
