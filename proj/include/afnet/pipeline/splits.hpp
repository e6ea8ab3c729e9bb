#pragma once

// Split construction and the waveform-level preparation ops: shift
// augmentation, lead selection, per-record standardization.
//
// build_splits never touches waveform files; augmented rows are recorded in
// the output manifests as "<record_id>#s[be]<amount>" and the shift is
// re-applied at load time, so split construction on a 60k-row manifest is
// instant and the materialization stays deterministic.

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>

#include "afnet/core/io.hpp"
#include "afnet/core/normalize.hpp"
#include "afnet/core/types.hpp"

namespace afnet {

struct ShiftSpec {
    int min_shift = 250;
    int max_shift = 500;
};

enum class ShiftSide : uint8_t { Begin, End };

struct ShiftDraw {
    ShiftSide side = ShiftSide::Begin;
    int amount = 0;
};

template <typename Rng>
ShiftDraw draw_shift(Rng& rng, const ShiftSpec& spec = {}) {
    std::uniform_int_distribution<int> amount(spec.min_shift, spec.max_shift);
    std::uniform_int_distribution<int> side(0, 1);
    ShiftDraw d;
    d.amount = amount(rng);
    d.side = side(rng) == 0 ? ShiftSide::Begin : ShiftSide::End;
    return d;
}

inline std::string shift_suffix(const ShiftDraw& d) {
    return strf("#s%c%d", d.side == ShiftSide::Begin ? 'b' : 'e', d.amount);
}

inline std::string strip_shift_suffix(const std::string& record_id) {
    size_t pos = record_id.find('#');
    return pos == std::string::npos ? record_id : record_id.substr(0, pos);
}

inline std::optional<ShiftDraw> parse_shift_suffix(const std::string& record_id) {
    size_t pos = record_id.find("#s");
    if (pos == std::string::npos) return std::nullopt;
    if (pos + 3 >= record_id.size()) throw data_error("malformed shift suffix in id: " + record_id);
    char side = record_id[pos + 2];
    if (side != 'b' && side != 'e') throw data_error("malformed shift suffix in id: " + record_id);
    ShiftDraw d;
    d.side = side == 'b' ? ShiftSide::Begin : ShiftSide::End;
    d.amount = std::stoi(record_id.substr(pos + 3));
    return d;
}

// Pad `amount` zero samples on the chosen side (all leads together) and drop
// the same count from the opposite side; length, label and rate unchanged.
inline EcgRecord apply_shift(const EcgRecord& ecg, const ShiftDraw& d) {
    const int n = ecg.n_samples, c = ecg.n_leads(), s = d.amount;
    if (n <= s) throw data_error(ecg.record_id + strf(": record too short to shift by %d", s));
    EcgRecord out = ecg;
    out.record_id = ecg.record_id + shift_suffix(d);
    std::fill(out.samples.begin(), out.samples.end(), 0.0f);
    if (d.side == ShiftSide::Begin) {
        // zeros enter at the start, the tail is truncated
        std::copy(ecg.samples.begin(), ecg.samples.begin() + size_t(n - s) * c,
                  out.samples.begin() + size_t(s) * c);
    } else {
        std::copy(ecg.samples.begin() + size_t(s) * c, ecg.samples.end(), out.samples.begin());
    }
    return out;
}

template <typename Rng>
EcgRecord random_shift(const EcgRecord& ecg, Rng& rng, const ShiftSpec& spec = {}) {
    if (ecg.n_samples <= spec.max_shift)
        throw data_error(ecg.record_id +
                         strf(": record of %d samples cannot take shifts up to %d", ecg.n_samples,
                              spec.max_shift));
    return apply_shift(ecg, draw_shift(rng, spec));
}

inline EcgRecord select_leads(const EcgRecord& ecg, const std::vector<Lead>& leads) {
    std::vector<int> cols;
    cols.reserve(leads.size());
    for (Lead want : leads) {
        auto it = std::find(ecg.leads.begin(), ecg.leads.end(), want);
        if (it == ecg.leads.end())
            throw data_error(ecg.record_id + ": lead " + lead_name(want) + " not present");
        cols.push_back(int(it - ecg.leads.begin()));
    }
    EcgRecord out;
    out.record_id = ecg.record_id;
    out.fs = ecg.fs;
    out.n_samples = ecg.n_samples;
    out.label = ecg.label;
    out.leads = leads;
    out.samples.resize(size_t(ecg.n_samples) * leads.size());
    for (int t = 0; t < ecg.n_samples; ++t)
        for (size_t j = 0; j < cols.size(); ++j)
            out.samples[size_t(t) * leads.size() + j] = ecg.at(t, cols[j]);
    return out;
}

// Per-record, per-lead z-score with population statistics; a constant lead
// maps to all zeros.
inline EcgRecord standardize_ecg(const EcgRecord& ecg) {
    EcgRecord out = ecg;
    const int n = ecg.n_samples, c = ecg.n_leads();
    for (int j = 0; j < c; ++j) {
        double sum = 0.0;
        for (int t = 0; t < n; ++t) sum += ecg.at(t, j);
        double mean = sum / n;
        double var = 0.0;
        for (int t = 0; t < n; ++t) {
            double d = ecg.at(t, j) - mean;
            var += d * d;
        }
        var /= n;
        double inv = var > 0 ? 1.0 / std::sqrt(var) : 0.0;
        for (int t = 0; t < n; ++t) out.at(t, j) = float((ecg.at(t, j) - mean) * inv);
    }
    return out;
}

struct Splits {
    Manifest train;
    Manifest test_balanced;
    Manifest test_unbalanced;
    NormStats norm;
    uint64_t seed = 0;
    double test_frac = 0.12;
    int unbal_ratio = 5;
};

inline Splits build_splits(const Manifest& manifest, double test_frac = 0.12, int unbal_ratio = 5,
                           uint64_t seed = 0, const ShiftSpec& shift_spec = {}) {
    if (!(test_frac > 0 && test_frac < 1)) throw data_error("test_frac must lie in (0, 1)");
    if (unbal_ratio < 1) throw data_error("unbal_ratio must be >= 1");

    std::vector<int> af1, af0;
    for (int i = 0; i < int(manifest.rows.size()); ++i)
        (manifest.rows[i].label == ClassLabel::AF1 ? af1 : af0).push_back(i);
    if (af1.empty() || af0.empty()) throw data_error("manifest must contain both classes");

    const int n_test_pos = int(std::floor(test_frac * double(af1.size())));
    if (n_test_pos < 1) throw data_error("too few AF1 rows for the requested test fraction");
    const int n_train_pos = int(af1.size()) - n_test_pos;
    if (n_train_pos < 1) throw data_error("no AF1 rows left for training after the test split");
    const int n_unbal_neg = unbal_ratio * n_test_pos;
    if (n_unbal_neg + n_train_pos > int(af0.size()))
        throw data_error(strf("insufficient AF0 rows: need %d for tests plus %d for training, have %zu",
                              n_unbal_neg, n_train_pos, af0.size()));

    std::mt19937_64 rng(seed);
    std::shuffle(af1.begin(), af1.end(), rng);
    std::shuffle(af0.begin(), af0.end(), rng);

    Splits s;
    s.seed = seed;
    s.test_frac = test_frac;
    s.unbal_ratio = unbal_ratio;

    auto row = [&](int idx) -> const ManifestRow& { return manifest.rows[idx]; };

    std::vector<int> test_pos(af1.begin(), af1.begin() + n_test_pos);
    std::vector<int> train_pos(af1.begin() + n_test_pos, af1.end());
    std::vector<int> unbal_neg(af0.begin(), af0.begin() + n_unbal_neg);
    std::vector<int> bal_neg(af0.begin(), af0.begin() + n_test_pos);
    std::vector<int> train_neg(af0.begin() + n_unbal_neg, af0.begin() + n_unbal_neg + n_train_pos);

    for (int i : test_pos) s.test_balanced.rows.push_back(row(i));
    for (int i : bal_neg) s.test_balanced.rows.push_back(row(i));
    for (int i : test_pos) s.test_unbalanced.rows.push_back(row(i));
    for (int i : unbal_neg) s.test_unbalanced.rows.push_back(row(i));

    std::vector<int> train_orig = train_pos;
    train_orig.insert(train_orig.end(), train_neg.begin(), train_neg.end());
    for (int i : train_orig) {
        s.train.rows.push_back(row(i));
        ManifestRow shifted = row(i);
        shifted.record_id += shift_suffix(draw_shift(rng, shift_spec));
        s.train.rows.push_back(std::move(shifted));
    }

    std::shuffle(s.train.rows.begin(), s.train.rows.end(), rng);
    std::shuffle(s.test_balanced.rows.begin(), s.test_balanced.rows.end(), rng);
    std::shuffle(s.test_unbalanced.rows.begin(), s.test_unbalanced.rows.end(), rng);

    std::vector<TabularRecord> train_tab;
    train_tab.reserve(s.train.rows.size());
    for (const auto& r : s.train.rows) train_tab.push_back(r.tabular);
    s.norm = fit_norm_stats(train_tab);
    return s;
}

inline std::string split_report_text(const Splits& s) {
    std::string r;
    r += strf("seed=%llu\n", (unsigned long long)s.seed);
    r += strf("test_frac=%g\n", s.test_frac);
    r += strf("unbal_ratio=%d\n", s.unbal_ratio);
    r += strf("train_total=%zu\n", s.train.rows.size());
    r += strf("train_af0=%d\n", s.train.count(ClassLabel::AF0));
    r += strf("train_af1=%d\n", s.train.count(ClassLabel::AF1));
    r += strf("test_balanced_total=%zu\n", s.test_balanced.rows.size());
    r += strf("test_balanced_af0=%d\n", s.test_balanced.count(ClassLabel::AF0));
    r += strf("test_balanced_af1=%d\n", s.test_balanced.count(ClassLabel::AF1));
    r += strf("test_unbalanced_total=%zu\n", s.test_unbalanced.rows.size());
    r += strf("test_unbalanced_af0=%d\n", s.test_unbalanced.count(ClassLabel::AF0));
    r += strf("test_unbalanced_af1=%d\n", s.test_unbalanced.count(ClassLabel::AF1));
    return r;
}

inline void persist_splits(const Splits& s, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_manifest(s.train, (fs::path(dir) / "train.csv").string());
    write_manifest(s.test_balanced, (fs::path(dir) / "test_balanced.csv").string());
    write_manifest(s.test_unbalanced, (fs::path(dir) / "test_unbalanced.csv").string());
    write_norm_stats(s.norm, (fs::path(dir) / "norm_stats.csv").string());
    std::ofstream rep((fs::path(dir) / "split_report.txt").string(), std::ios::trunc);
    rep << split_report_text(s);
}

}  // namespace afnet
