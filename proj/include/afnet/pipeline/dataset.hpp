#pragma once

// Manifest -> in-memory training matrices. Per record the loader applies, in
// order: optional band-pass filter, the recorded shift (train-set rows whose
// id carries a #s suffix), optional lead selection, per-record
// standardization. Tabular rows are z-scored with the split's NormStats.

#include <optional>

#include "afnet/core/io.hpp"
#include "afnet/core/normalize.hpp"
#include "afnet/dsp/butterworth.hpp"
#include "afnet/nn/tensor.hpp"
#include "afnet/pipeline/splits.hpp"

namespace afnet {

struct LoadOptions {
    std::optional<dsp::BandSpec> band;
    std::optional<std::vector<Lead>> leads;
    bool standardize = true;
    const NormStats* norm = nullptr;  // enables the tabular matrix
};

struct DataSet {
    int count = 0;
    int channels = 0;
    int time_len = 0;
    double fs = 0;
    std::vector<float> ecg;  // count x channels x time_len, channel-major per record
    std::vector<float> tab;  // count x kNumTabularFeatures, z-scored
    bool has_tab = false;
    std::vector<int> labels;
    std::vector<std::string> ids;

    int count_label(int lab) const {
        int n = 0;
        for (int l : labels) n += (l == lab) ? 1 : 0;
        return n;
    }
};

inline EcgRecord preprocess_record(EcgRecord rec, const ManifestRow& row, const LoadOptions& opt,
                                   const dsp::SosFilter* filter) {
    rec.record_id = row.record_id;
    rec.label = row.label;
    if (filter) {
        std::vector<float> col(rec.n_samples);
        for (int j = 0; j < rec.n_leads(); ++j) {
            for (int t = 0; t < rec.n_samples; ++t) col[t] = rec.at(t, j);
            auto filtered = dsp::apply_sos(*filter, col);
            for (int t = 0; t < rec.n_samples; ++t) rec.at(t, j) = filtered[t];
        }
    }
    if (auto shift = parse_shift_suffix(row.record_id)) rec = apply_shift(rec, *shift);
    if (opt.leads) rec = select_leads(rec, *opt.leads);
    if (opt.standardize) rec = standardize_ecg(rec);
    return rec;
}

inline DataSet load_dataset(const Manifest& manifest, const LoadOptions& opt = {}) {
    DataSet ds;
    ds.count = int(manifest.rows.size());
    if (ds.count == 0) throw data_error("empty manifest");
    ds.labels.reserve(ds.count);
    ds.ids.reserve(ds.count);
    if (opt.norm) {
        ds.has_tab = true;
        ds.tab.reserve(size_t(ds.count) * kNumTabularFeatures);
    }

    std::optional<dsp::SosFilter> filter;
    for (int i = 0; i < ds.count; ++i) {
        const ManifestRow& row = manifest.rows[i];
        EcgRecord raw = read_ecg(row.path);
        if (i == 0) {
            ds.fs = raw.fs;
            if (opt.band) filter = dsp::design_butterworth_bandpass(*opt.band, raw.fs);
        } else if (raw.fs != ds.fs) {
            throw data_error(row.record_id + ": sampling rate differs from the rest of the set");
        }
        EcgRecord rec =
            preprocess_record(std::move(raw), row, opt, filter ? &*filter : nullptr);
        if (i == 0) {
            ds.channels = rec.n_leads();
            ds.time_len = rec.n_samples;
            ds.ecg.resize(size_t(ds.count) * ds.channels * ds.time_len);
        } else if (rec.n_leads() != ds.channels || rec.n_samples != ds.time_len) {
            throw data_error(row.record_id + ": shape differs from the rest of the set");
        }
        float* dst = ds.ecg.data() + size_t(i) * ds.channels * ds.time_len;
        for (int c = 0; c < ds.channels; ++c)
            for (int t = 0; t < ds.time_len; ++t) dst[size_t(c) * ds.time_len + t] = rec.at(t, c);
        ds.labels.push_back(label_index(row.label));
        ds.ids.push_back(row.record_id);
        if (opt.norm) {
            auto f = apply_norm_stats(row.tabular, *opt.norm);
            for (double v : f) ds.tab.push_back(float(v));
        }
    }
    return ds;
}

// Assemble a minibatch from dataset rows (channel-major waveform layout).
inline void gather_batch(const DataSet& ds, const std::vector<int>& idx, size_t begin, size_t end,
                         nn::Tensor<float>* x, nn::Tensor<float>* tab, std::vector<int>& labels) {
    const int b = int(end - begin);
    labels.resize(b);
    if (x) x->reshape({b, ds.channels, ds.time_len});
    if (tab) tab->reshape({b, kNumTabularFeatures});
    for (int r = 0; r < b; ++r) {
        int row = idx[begin + r];
        labels[r] = ds.labels[row];
        if (x) {
            const float* src = ds.ecg.data() + size_t(row) * ds.channels * ds.time_len;
            std::copy(src, src + size_t(ds.channels) * ds.time_len,
                      x->ptr() + size_t(r) * ds.channels * ds.time_len);
        }
        if (tab) {
            const float* src = ds.tab.data() + size_t(row) * kNumTabularFeatures;
            std::copy(src, src + kNumTabularFeatures, tab->ptr() + size_t(r) * kNumTabularFeatures);
        }
    }
}

}  // namespace afnet
