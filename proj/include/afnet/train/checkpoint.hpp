#pragma once

// "AFCK" checkpoint format: named float tensors, little-endian.
//   magic "AFCK" | version u16 | count u32 |
//   repeat { name_len u16 | name | rank u8 | dims u32 each | payload f32 LE }
// Alongside the model parameters (batch-norm running stats included) the file
// carries reserved entries: the architecture description, its fingerprint,
// the NormStats the model consumed, and the preprocessing (band / lead
// subset), so evaluation and CAM rebuild the exact training-time pipeline.

#include <map>
#include <optional>

#include "afnet/core/io.hpp"
#include "afnet/dsp/butterworth.hpp"
#include "afnet/models/models.hpp"

namespace afnet {

struct Checkpoint {
    models::ModelSpec spec;
    std::map<std::string, nn::Tensor<float>> tensors;
    std::optional<NormStats> norm;
    std::optional<dsp::BandSpec> band;
    std::optional<std::vector<Lead>> leads;
};

namespace detail_ck {

inline constexpr char kMagic[4] = {'A', 'F', 'C', 'K'};
inline constexpr uint16_t kVersion = 1;

inline std::vector<float> encode_spec(const models::ModelSpec& spec) {
    std::vector<float> v;
    v.push_back(float(static_cast<int>(spec.kind)));
    v.push_back(float(spec.ecg.n_leads));
    v.push_back(float(spec.ecg.time_len));
    v.push_back(float(spec.ecg.filters));
    v.push_back(float(spec.ecg.kernel));
    v.push_back(float(spec.ecg.dilations.size()));
    for (int d : spec.ecg.dilations) v.push_back(float(d));
    v.push_back(float(spec.ecg.pool_after.size()));
    for (int p : spec.ecg.pool_after) v.push_back(float(p));
    v.push_back(float(spec.ecg.dropout * 1e6));
    v.push_back(float(spec.tab.n_features));
    v.push_back(float(spec.tab.widths.size()));
    for (int w : spec.tab.widths) v.push_back(float(w));
    v.push_back(float(spec.tab.dropout * 1e6));
    return v;
}

inline models::ModelSpec decode_spec(const std::vector<float>& v, const std::string& ctx) {
    size_t i = 0;
    auto next = [&]() -> float {
        if (i >= v.size()) throw data_error(ctx + ": truncated architecture entry");
        return v[i++];
    };
    models::ModelSpec spec;
    spec.kind = static_cast<models::ModelKind>(int(next()));
    spec.ecg.n_leads = int(next());
    spec.ecg.time_len = int(next());
    spec.ecg.filters = int(next());
    spec.ecg.kernel = int(next());
    spec.ecg.dilations.assign(size_t(next()), 0);
    for (auto& d : spec.ecg.dilations) d = int(next());
    spec.ecg.pool_after.assign(size_t(next()), 0);
    for (auto& p : spec.ecg.pool_after) p = int(next());
    spec.ecg.dropout = double(next()) / 1e6;
    spec.tab.n_features = int(next());
    spec.tab.widths.assign(size_t(next()), 0);
    for (auto& w : spec.tab.widths) w = int(next());
    spec.tab.dropout = double(next()) / 1e6;
    return spec;
}

inline std::vector<float> fingerprint_floats(uint64_t fp) {
    return {float(fp & 0xffff), float((fp >> 16) & 0xffff), float((fp >> 32) & 0xffff),
            float((fp >> 48) & 0xffff)};
}

}  // namespace detail_ck

template <typename S>
void save_checkpoint(const nn::ParameterStore<S>& params, const models::ModelSpec& spec,
                     const std::string& path, const NormStats* norm = nullptr,
                     const dsp::BandSpec* band = nullptr, const std::vector<Lead>* leads = nullptr) {
    std::string out;
    out.append(detail_ck::kMagic, 4);
    detail::put_u16(out, detail_ck::kVersion);

    std::vector<std::pair<std::string, std::vector<float>>> extra;
    extra.emplace_back("__arch__", detail_ck::encode_spec(spec));
    extra.emplace_back("__fingerprint__", detail_ck::fingerprint_floats(spec.fingerprint()));
    if (norm) {
        std::vector<float> m(norm->mean.begin(), norm->mean.end());
        std::vector<float> s(norm->stddev.begin(), norm->stddev.end());
        extra.emplace_back("__norm_mean__", m);
        extra.emplace_back("__norm_std__", s);
    }
    if (band) extra.emplace_back("__band__", std::vector<float>{float(band->low_hz), float(band->high_hz)});
    if (leads) {
        std::vector<float> l;
        for (Lead x : *leads) l.push_back(float(static_cast<int>(x)));
        extra.emplace_back("__leads__", l);
    }

    detail::put_u32(out, uint32_t(params.items.size() + extra.size()));
    auto put_entry = [&](const std::string& name, const std::vector<int>& shape,
                         auto value_at, size_t numel) {
        detail::put_u16(out, uint16_t(name.size()));
        out += name;
        out.push_back(char(uint8_t(shape.size())));
        for (int d : shape) detail::put_u32(out, uint32_t(d));
        for (size_t i = 0; i < numel; ++i) detail::put_f32(out, value_at(i));
    };
    for (const auto& [name, vals] : extra)
        put_entry(name, {int(vals.size())}, [&](size_t i) { return vals[i]; }, vals.size());
    for (const auto* p : params.items)
        put_entry(p->name, p->value.shape, [&](size_t i) { return float(p->value.data[i]); },
                  p->value.numel());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw data_error("cannot open for writing: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw data_error("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), detail_ck::kMagic, 4) != 0)
        throw data_error(path + ": bad magic, not an AFCK checkpoint");
    detail::ByteReader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), 4, path};
    if (r.u16("version") != detail_ck::kVersion)
        throw data_error(path + ": unsupported checkpoint version");
    uint32_t count = r.u32("entry count");

    Checkpoint ck;
    for (uint32_t e = 0; e < count; ++e) {
        uint16_t name_len = r.u16("name length");
        r.need(name_len, "name");
        std::string name(reinterpret_cast<const char*>(r.p + r.pos), name_len);
        r.pos += name_len;
        r.need(1, "rank");
        int rank = r.p[r.pos++];
        std::vector<int> shape(rank);
        size_t numel = 1;
        for (int i = 0; i < rank; ++i) {
            shape[i] = int(r.u32("dims"));
            numel *= size_t(shape[i]);
        }
        nn::Tensor<float> t(shape);
        for (size_t i = 0; i < numel; ++i) t.data[i] = r.f32("payload");
        ck.tensors.emplace(std::move(name), std::move(t));
    }
    if (r.pos != r.len) throw data_error(path + ": trailing bytes after last entry");

    auto arch = ck.tensors.find("__arch__");
    if (arch == ck.tensors.end()) throw data_error(path + ": missing architecture entry");
    ck.spec = detail_ck::decode_spec(arch->second.data, path);

    auto fp = ck.tensors.find("__fingerprint__");
    if (fp == ck.tensors.end()) throw data_error(path + ": missing fingerprint entry");
    auto expect = detail_ck::fingerprint_floats(ck.spec.fingerprint());
    for (int i = 0; i < 4; ++i)
        if (fp->second.data[i] != expect[i])
            throw data_error(path + ": fingerprint does not match the stored architecture");

    if (ck.tensors.count("__norm_mean__")) {
        NormStats ns;
        const auto& m = ck.tensors.at("__norm_mean__").data;
        const auto& s = ck.tensors.at("__norm_std__").data;
        if (m.size() != kNumTabularFeatures || s.size() != kNumTabularFeatures)
            throw data_error(path + ": malformed norm stats entries");
        for (int i = 0; i < kNumTabularFeatures; ++i) {
            ns.mean[i] = m[i];
            ns.stddev[i] = s[i];
        }
        ck.norm = ns;
    }
    if (ck.tensors.count("__band__")) {
        const auto& b = ck.tensors.at("__band__").data;
        ck.band = dsp::BandSpec{b[0], b[1]};
    }
    if (ck.tensors.count("__leads__")) {
        std::vector<Lead> l;
        for (float v : ck.tensors.at("__leads__").data) l.push_back(lead_from_ordinal(int(v)));
        ck.leads = l;
    }
    return ck;
}

// Copy checkpoint tensors into a live model; shapes and fingerprint must
// match exactly.
template <typename S>
void apply_checkpoint(const Checkpoint& ck, nn::ParameterStore<S>& params,
                      const models::ModelSpec& model_spec, const std::string& ctx) {
    if (model_spec.fingerprint() != ck.spec.fingerprint())
        throw data_error(ctx + ": checkpoint fingerprint mismatch (stored " +
                         ck.spec.fingerprint_text() + ", model " + model_spec.fingerprint_text() +
                         ")");
    for (auto* p : params.items) {
        auto it = ck.tensors.find(p->name);
        if (it == ck.tensors.end())
            throw data_error(ctx + ": checkpoint missing tensor " + p->name);
        if (it->second.shape != p->value.shape)
            throw data_error(ctx + ": shape mismatch for tensor " + p->name);
        p->value.copy_from(it->second);
    }
}

}  // namespace afnet
