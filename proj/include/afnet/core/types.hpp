#pragma once

// Domain types: leads, labeled waveforms, tabular exam features, manifests.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afnet/common.hpp"

namespace afnet {

// The 12 standard leads, in the fixed channel order used everywhere.
enum class Lead : uint8_t { D1, D2, D3, avR, avF, avL, v1, v2, v3, v4, v5, v6 };

inline constexpr int kNumLeads = 12;

inline constexpr std::array<const char*, kNumLeads> kLeadNames = {
    "D1", "D2", "D3", "avR", "avF", "avL", "v1", "v2", "v3", "v4", "v5", "v6"};

inline const char* lead_name(Lead l) { return kLeadNames[static_cast<int>(l)]; }

inline Lead lead_from_name(const std::string& name) {
    for (int i = 0; i < kNumLeads; ++i)
        if (name == kLeadNames[i]) return static_cast<Lead>(i);
    throw data_error("unknown lead name: " + name);
}

inline Lead lead_from_ordinal(int ord) {
    if (ord < 0 || ord >= kNumLeads) throw data_error(strf("lead ordinal out of range: %d", ord));
    return static_cast<Lead>(ord);
}

inline std::vector<Lead> all_leads() {
    std::vector<Lead> v(kNumLeads);
    for (int i = 0; i < kNumLeads; ++i) v[i] = static_cast<Lead>(i);
    return v;
}

enum class ClassLabel : uint8_t { AF0 = 0, AF1 = 1 };

inline int label_index(ClassLabel c) { return static_cast<int>(c); }

inline ClassLabel label_from_token(const std::string& tok) {
    if (tok == "0") return ClassLabel::AF0;
    if (tok == "1") return ClassLabel::AF1;
    throw data_error("unknown label token: '" + tok + "'");
}

// One ECG exam: samples in millivolts, time-major [n_samples x n_leads].
struct EcgRecord {
    std::string record_id;
    std::vector<float> samples;  // samples[t * n_leads + lead]
    int n_samples = 0;
    float fs = 0.0f;
    std::vector<Lead> leads;
    ClassLabel label = ClassLabel::AF0;

    int n_leads() const { return static_cast<int>(leads.size()); }
    float at(int t, int lead) const { return samples[size_t(t) * leads.size() + lead]; }
    float& at(int t, int lead) { return samples[size_t(t) * leads.size() + lead]; }

    void validate() const {
        if (leads.empty()) throw data_error(record_id + ": record has no leads");
        if (n_samples <= 0) throw data_error(record_id + ": record has no samples");
        if (!(fs > 0)) throw data_error(record_id + ": sampling rate must be positive");
        if (samples.size() != size_t(n_samples) * leads.size())
            throw data_error(record_id + ": sample buffer does not match declared shape");
        for (float v : samples)
            if (!std::isfinite(v)) throw data_error(record_id + ": non-finite sample value");
    }
};

enum class Gender : uint8_t { F = 0, M = 1 };

inline constexpr int kNumTabularFeatures = 17;

// Feature order matches the manifest column schema.
inline constexpr std::array<const char*, kNumTabularFeatures> kTabularFeatureNames = {
    "gender",   "age",      "P_AXIS",     "P_DUR",   "P_ONSET",  "P_OFFSET",
    "PR_INT",   "QRS_AXIS", "QRS_DUR",    "QRS_ONSET", "QRS_OFFSET", "QT_INT",
    "QTC_INT",  "RR_INTERVAL", "T_AXIS",  "T_OFFSET", "V_RATE"};

// Morphology/demographic features of one exam. Axes in degrees, durations and
// intervals in milliseconds, V_RATE in beats per minute, age in years.
struct TabularRecord {
    Gender gender = Gender::F;
    double age = 0;
    double p_axis = 0, p_dur = 0, p_onset = 0, p_offset = 0, pr_int = 0;
    double qrs_axis = 0, qrs_dur = 0, qrs_onset = 0, qrs_offset = 0;
    double qt_int = 0, qtc_int = 0, rr_interval = 0;
    double t_axis = 0, t_offset = 0, v_rate = 0;

    // Numeric feature vector in schema order; gender encoded M=1, F=0.
    std::array<double, kNumTabularFeatures> features() const {
        return {gender == Gender::M ? 1.0 : 0.0,
                age,     p_axis,  p_dur,   p_onset,  p_offset, pr_int,
                qrs_axis, qrs_dur, qrs_onset, qrs_offset, qt_int, qtc_int,
                rr_interval, t_axis, t_offset, v_rate};
    }

    static TabularRecord from_features(const std::array<double, kNumTabularFeatures>& f) {
        TabularRecord r;
        r.gender = f[0] > 0.5 ? Gender::M : Gender::F;
        r.age = f[1];
        r.p_axis = f[2];
        r.p_dur = f[3];
        r.p_onset = f[4];
        r.p_offset = f[5];
        r.pr_int = f[6];
        r.qrs_axis = f[7];
        r.qrs_dur = f[8];
        r.qrs_onset = f[9];
        r.qrs_offset = f[10];
        r.qt_int = f[11];
        r.qtc_int = f[12];
        r.rr_interval = f[13];
        r.t_axis = f[14];
        r.t_offset = f[15];
        r.v_rate = f[16];
        return r;
    }

    void validate(const std::string& ctx) const {
        auto f = features();
        for (int i = 2; i < kNumTabularFeatures; ++i) {
            const std::string name = kTabularFeatureNames[i];
            bool is_axis = name == "P_AXIS" || name == "QRS_AXIS" || name == "T_AXIS";
            if (is_axis) {
                if (f[i] < -180.0 || f[i] > 360.0)
                    throw data_error(ctx + ": axis " + name + " outside [-180, 360]");
            } else if (!(f[i] > 0)) {
                throw data_error(ctx + ": feature " + name + " must be strictly positive");
            }
        }
    }
};

struct ManifestRow {
    std::string record_id;
    std::string path;
    ClassLabel label = ClassLabel::AF0;
    TabularRecord tabular;
};

struct Manifest {
    std::vector<ManifestRow> rows;

    size_t size() const { return rows.size(); }
    int count(ClassLabel c) const {
        int n = 0;
        for (const auto& r : rows) n += (r.label == c) ? 1 : 0;
        return n;
    }
};

// Per-feature scaling statistics, fitted on training data with the population
// (divide-by-n) denominator.
struct NormStats {
    std::array<double, kNumTabularFeatures> mean{};
    std::array<double, kNumTabularFeatures> stddev{};

    static NormStats identity() {
        NormStats s;
        s.mean.fill(0.0);
        s.stddev.fill(1.0);
        return s;
    }
};

}  // namespace afnet
