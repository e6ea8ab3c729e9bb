#pragma once

// Performance metrics: threshold accuracy, AUC via tie-corrected rank sums
// (equal to the pairwise Mann-Whitney count), calibration curve, multi-seed
// aggregation.

#include <algorithm>
#include <cmath>
#include <vector>

#include "afnet/common.hpp"

namespace afnet {

struct Scored {
    double score = 0;  // probability of class AF1
    int label = 0;     // 0 or 1
};

using ScoredSet = std::vector<Scored>;

inline double accuracy(const ScoredSet& scored, double threshold = 0.5) {
    if (scored.empty()) throw data_error("accuracy: empty set");
    long correct = 0;
    for (const auto& s : scored) {
        int pred = s.score >= threshold ? 1 : 0;
        correct += pred == s.label ? 1 : 0;
    }
    return double(correct) / double(scored.size());
}

// P(score_pos > score_neg) + 0.5 P(tie), computed with average ranks.
inline double auc(const ScoredSet& scored) {
    size_t n1 = 0;
    for (const auto& s : scored) n1 += s.label == 1 ? 1 : 0;
    size_t n0 = scored.size() - n1;
    if (n1 == 0 || n0 == 0) throw data_error("auc: both classes must be present");

    std::vector<size_t> order(scored.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scored[a].score < scored[b].score; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scored[order[j]].score == scored[order[i]].score) ++j;
        double avg_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
        for (size_t k = i; k < j; ++k)
            if (scored[order[k]].label == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    double u = rank_sum_pos - double(n1) * double(n1 + 1) / 2.0;
    return u / (double(n1) * double(n0));
}

struct CalibrationBin {
    double mean_predicted = 0;
    double empirical_frequency = 0;
    long count = 0;
};

inline std::vector<CalibrationBin> calibration_curve(const ScoredSet& scored, int n_bins = 10) {
    if (scored.empty()) throw data_error("calibration_curve: empty set");
    if (n_bins < 2) throw data_error("calibration_curve: need at least 2 bins");
    std::vector<double> sum_pred(n_bins, 0.0), sum_pos(n_bins, 0.0);
    std::vector<long> count(n_bins, 0);
    for (const auto& s : scored) {
        if (s.score < 0.0 || s.score > 1.0)
            throw data_error(strf("calibration_curve: score %g outside [0, 1]", s.score));
        int b = std::min(int(s.score * n_bins), n_bins - 1);
        sum_pred[b] += s.score;
        sum_pos[b] += s.label;
        count[b] += 1;
    }
    std::vector<CalibrationBin> bins;
    for (int b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        bins.push_back({sum_pred[b] / count[b], sum_pos[b] / count[b], count[b]});
    }
    return bins;
}

struct MeanStd {
    double mean = 0;
    double stddev = 0;  // sample (n-1) denominator
};

inline MeanStd aggregate_runs(const std::vector<double>& values) {
    if (values.size() < 2) throw data_error("aggregate_runs: need at least 2 values");
    MeanStd out;
    for (double v : values) out.mean += v;
    out.mean /= double(values.size());
    double acc = 0;
    for (double v : values) acc += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(acc / double(values.size() - 1));
    return out;
}

}  // namespace afnet
