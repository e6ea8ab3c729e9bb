#pragma once

// Tabular z-scoring. Stats are fitted on training rows only and reused
// unchanged at test time; the population (divide-by-n) denominator is used.

#include <vector>

#include "afnet/core/types.hpp"

namespace afnet {

struct NormalizedTabular {
    std::vector<std::array<double, kNumTabularFeatures>> rows;
    NormStats stats;
};

inline NormStats fit_norm_stats(const std::vector<TabularRecord>& records) {
    if (records.size() < 2)
        throw data_error("fitting normalization stats requires at least 2 training rows");
    NormStats s;
    const double n = double(records.size());
    for (const auto& r : records) {
        auto f = r.features();
        for (int i = 0; i < kNumTabularFeatures; ++i) s.mean[i] += f[i];
    }
    for (int i = 0; i < kNumTabularFeatures; ++i) s.mean[i] /= n;
    for (const auto& r : records) {
        auto f = r.features();
        for (int i = 0; i < kNumTabularFeatures; ++i) {
            double d = f[i] - s.mean[i];
            s.stddev[i] += d * d;
        }
    }
    for (int i = 0; i < kNumTabularFeatures; ++i) {
        s.stddev[i] = std::sqrt(s.stddev[i] / n);
        if (!(s.stddev[i] > 0))
            throw data_error(std::string("zero-variance feature when fitting stats: ") +
                             kTabularFeatureNames[i]);
    }
    return s;
}

inline std::array<double, kNumTabularFeatures> apply_norm_stats(
    std::array<double, kNumTabularFeatures> f, const NormStats& s) {
    for (int i = 0; i < kNumTabularFeatures; ++i) f[i] = (f[i] - s.mean[i]) / s.stddev[i];
    return f;
}

inline std::array<double, kNumTabularFeatures> apply_norm_stats(const TabularRecord& r,
                                                                const NormStats& s) {
    return apply_norm_stats(r.features(), s);
}

inline NormalizedTabular normalize_tabular(const std::vector<TabularRecord>& records,
                                           const NormStats* stats = nullptr) {
    NormalizedTabular out;
    out.stats = stats ? *stats : fit_norm_stats(records);
    out.rows.reserve(records.size());
    for (const auto& r : records) out.rows.push_back(apply_norm_stats(r, out.stats));
    return out;
}

}  // namespace afnet
