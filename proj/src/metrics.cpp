#include "dtaad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dtaad {

PrfResult precision_recall_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw InvalidArgument("precision_recall_f1: " + std::to_string(pred.size()) + " predictions vs " +
                              std::to_string(truth.size()) + " truth labels");
    PrfResult r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, t = truth[i] != 0;
        if (p && t)
            ++r.counts.tp;
        else if (p && !t)
            ++r.counts.fp;
        else if (!p && t)
            ++r.counts.fn;
        else
            ++r.counts.tn;
    }
    const double tp = static_cast<double>(r.counts.tp);
    r.precision = r.counts.tp + r.counts.fp > 0 ? tp / static_cast<double>(r.counts.tp + r.counts.fp) : 0.0;
    r.recall = r.counts.tp + r.counts.fn > 0 ? tp / static_cast<double>(r.counts.tp + r.counts.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth) {
    if (scores.size() != truth.size())
        throw InvalidArgument("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                              std::to_string(truth.size()) + " truth labels");
    long long positives = 0;
    for (int t : truth) positives += t != 0 ? 1 : 0;
    const long long negatives = static_cast<long long>(truth.size()) - positives;
    if (positives == 0 || negatives == 0)
        throw UndefinedMetricError("roc_auc: truth labels contain a single class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // u counts pairs in half units: 2 per win, 1 per tie.
    long long u = 0;
    long long negatives_below = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long long group_pos = 0, group_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (truth[order[j]] != 0)
                ++group_pos;
            else
                ++group_neg;
            ++j;
        }
        u += group_pos * (2 * negatives_below + group_neg);
        negatives_below += group_neg;
        i = j;
    }
    return static_cast<double>(u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

namespace {

/// Dimensions ordered by descending score, ties broken by dimension index.
std::vector<int> ranked_dims(const std::vector<double>& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    return order;
}

int cutoff_for(std::size_t g, double p, std::size_t dims) {
    const auto c = static_cast<long long>(std::floor(static_cast<double>(g) * p / 100.0));
    return static_cast<int>(std::min<long long>(c, static_cast<long long>(dims)));
}

}  // namespace

double hitrate_at_p(const DiagnosisRanking& ranking, double p) {
    double total = 0.0;
    long long evaluated = 0;
    for (const DiagnosisTimestamp& ts : ranking) {
        if (ts.true_dims.empty()) continue;  // timestamps without ground truth are skipped
        const int cutoff = cutoff_for(ts.true_dims.size(), p, ts.scores.size());
        const std::vector<int> order = ranked_dims(ts.scores);
        long long hits = 0;
        for (int r = 0; r < cutoff; ++r)
            if (std::find(ts.true_dims.begin(), ts.true_dims.end(), order[static_cast<std::size_t>(r)]) !=
                ts.true_dims.end())
                ++hits;
        total += static_cast<double>(hits) / static_cast<double>(ts.true_dims.size());
        ++evaluated;
    }
    return evaluated > 0 ? total / static_cast<double>(evaluated) : 0.0;
}

double ndcg_at_p(const DiagnosisRanking& ranking, double p) {
    double total = 0.0;
    long long evaluated = 0;
    for (const DiagnosisTimestamp& ts : ranking) {
        if (ts.true_dims.empty()) continue;
        const int cutoff = cutoff_for(ts.true_dims.size(), p, ts.scores.size());
        const std::vector<int> order = ranked_dims(ts.scores);
        double dcg = 0.0;
        for (int r = 0; r < cutoff; ++r)
            if (std::find(ts.true_dims.begin(), ts.true_dims.end(), order[static_cast<std::size_t>(r)]) !=
                ts.true_dims.end())
                dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
        double idcg = 0.0;
        const int ideal = std::min<int>(cutoff, static_cast<int>(ts.true_dims.size()));
        for (int r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
        total += idcg > 0.0 ? dcg / idcg : 0.0;
        ++evaluated;
    }
    return evaluated > 0 ? total / static_cast<double>(evaluated) : 0.0;
}

std::vector<int> point_adjust(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw InvalidArgument("point_adjust: length mismatch");
    std::vector<int> adjusted = pred;
    std::size_t i = 0;
    while (i < truth.size()) {
        if (truth[i] == 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        bool hit = false;
        while (j < truth.size() && truth[j] != 0) {
            hit = hit || pred[j] != 0;
            ++j;
        }
        if (hit)
            for (std::size_t k = i; k < j; ++k) adjusted[k] = 1;
        i = j;
    }
    return adjusted;
}

}  // namespace dtaad
