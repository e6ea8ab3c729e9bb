#pragma once

// File formats: "ECG1" binary waveforms, manifest CSV, NormStats CSV.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "afnet/core/types.hpp"

namespace afnet {

namespace detail {

inline void put_u16(std::string& out, uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char(v >> 8));
}
inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct ByteReader {
    const uint8_t* p;
    size_t len, pos = 0;
    const std::string& ctx;

    void need(size_t n, const char* what) {
        if (pos + n > len)
            throw data_error(ctx + ": truncated while reading " + what +
                             strf(" (need %zu bytes at offset %zu, file has %zu)", n, pos, len));
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = uint16_t(p[pos]) | (uint16_t(p[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32(const char* what) {
        uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

}  // namespace detail

inline constexpr char kEcgMagic[4] = {'E', 'C', 'G', '1'};
inline constexpr uint16_t kEcgFormatVersion = 1;

inline std::string encode_ecg(const EcgRecord& rec) {
    rec.validate();
    std::string out;
    out.reserve(16 + rec.leads.size() + rec.samples.size() * 4);
    out.append(kEcgMagic, 4);
    detail::put_u16(out, kEcgFormatVersion);
    detail::put_u16(out, uint16_t(rec.leads.size()));
    detail::put_u32(out, uint32_t(rec.n_samples));
    detail::put_f32(out, rec.fs);
    for (Lead l : rec.leads) out.push_back(char(static_cast<uint8_t>(l)));
    for (float v : rec.samples) detail::put_f32(out, v);
    return out;
}

inline void write_ecg(const EcgRecord& rec, const std::string& path) {
    std::string bytes = encode_ecg(rec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw data_error("write failed: " + path);
}

inline EcgRecord decode_ecg(const std::string& bytes, const std::string& ctx) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kEcgMagic, 4) != 0)
        throw data_error(ctx + ": bad magic, not an ECG1 waveform file");
    detail::ByteReader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), 4, ctx};
    uint16_t version = r.u16("format version");
    if (version != kEcgFormatVersion)
        throw data_error(ctx + strf(": unsupported format version %u", unsigned(version)));
    uint16_t n_leads = r.u16("lead count");
    uint32_t n_samples = r.u32("sample count");
    float fs = r.f32("sampling rate");
    if (n_leads == 0) throw data_error(ctx + ": lead count is zero");
    if (n_samples == 0) throw data_error(ctx + ": sample count is zero");

    EcgRecord rec;
    rec.fs = fs;
    rec.n_samples = int(n_samples);
    rec.leads.reserve(n_leads);
    for (int i = 0; i < n_leads; ++i) {
        r.need(1, "lead ordinals");
        rec.leads.push_back(lead_from_ordinal(r.p[r.pos++]));
    }

    size_t expected_payload = size_t(n_samples) * n_leads * 4;
    size_t actual_payload = bytes.size() - r.pos;
    if (actual_payload != expected_payload)
        throw data_error(ctx + strf(": payload size mismatch, expected %zu bytes (%u x %u x 4), got %zu",
                                    expected_payload, n_samples, unsigned(n_leads), actual_payload));
    rec.samples.resize(size_t(n_samples) * n_leads);
    for (auto& v : rec.samples) v = r.f32("samples");
    for (float v : rec.samples)
        if (!std::isfinite(v)) throw data_error(ctx + ": non-finite sample in payload");
    return rec;
}

inline EcgRecord read_ecg(const std::string& path) {
    EcgRecord rec = decode_ecg(read_file_bytes(path), path);
    rec.record_id = std::filesystem::path(path).stem().string();
    return rec;
}

inline const std::string& manifest_header() {
    static const std::string h = [] {
        std::string s = "record_id,path,label";
        for (const char* f : kTabularFeatureNames) s += std::string(",") + f;
        return s;
    }();
    return h;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_feature(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string manifest_row_line(const ManifestRow& row) {
    std::string line = row.record_id + "," + row.path + "," +
                       (row.label == ClassLabel::AF1 ? "1" : "0");
    line += row.tabular.gender == Gender::M ? ",M" : ",F";
    auto f = row.tabular.features();
    for (int i = 1; i < kNumTabularFeatures; ++i) line += "," + format_feature(f[i]);
    return line;
}

inline void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << manifest_header() << "\n";
    for (const auto& row : m.rows) out << manifest_row_line(row) << "\n";
    if (!out) throw data_error("write failed: " + path);
}

inline Manifest parse_manifest(std::istream& in, const std::string& ctx) {
    std::string line;
    if (!std::getline(in, line)) throw data_error(ctx + ": empty manifest");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != manifest_header())
        throw data_error(ctx + ": header row does not match the manifest schema\n  expected: " +
                         manifest_header() + "\n  got:      " + line);

    Manifest m;
    std::unordered_map<std::string, int> seen;  // record_id -> line number
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != 3 + kNumTabularFeatures)
            throw data_error(ctx + strf(": line %d: expected %d cells, got %zu", lineno,
                                        3 + kNumTabularFeatures, cells.size()));
        ManifestRow row;
        row.record_id = cells[0];
        row.path = cells[1];
        row.label = label_from_token(cells[2]);

        auto it = seen.find(row.record_id);
        if (it != seen.end())
            throw data_error(ctx + strf(": duplicate record_id '%s' on lines %d and %d",
                                        row.record_id.c_str(), it->second, lineno));
        seen.emplace(row.record_id, lineno);

        std::array<double, kNumTabularFeatures> f{};
        const std::string& g = cells[3];
        if (g == "M" || g == "1")
            f[0] = 1.0;
        else if (g == "F" || g == "0")
            f[0] = 0.0;
        else
            throw data_error(ctx + strf(": line %d: bad gender cell '%s'", lineno, g.c_str()));
        for (int i = 1; i < kNumTabularFeatures; ++i) {
            const std::string& cell = cells[3 + i];
            char* end = nullptr;
            f[i] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw data_error(ctx + strf(": line %d: non-numeric cell '%s' for %s", lineno,
                                            cell.c_str(), kTabularFeatureNames[i]));
        }
        row.tabular = TabularRecord::from_features(f);
        m.rows.push_back(std::move(row));
    }
    return m;
}

inline Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("missing manifest file: " + path);
    return parse_manifest(in, path);
}

inline void write_norm_stats(const NormStats& s, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (int i = 0; i < kNumTabularFeatures; ++i)
        out << (i ? "," : "") << kTabularFeatureNames[i];
    out << "\n";
    for (int i = 0; i < kNumTabularFeatures; ++i) {
        char buf[40];
        snprintf(buf, sizeof(buf), "%.17g", s.mean[i]);
        out << (i ? "," : "") << buf;
    }
    out << "\n";
    for (int i = 0; i < kNumTabularFeatures; ++i) {
        char buf[40];
        snprintf(buf, sizeof(buf), "%.17g", s.stddev[i]);
        out << (i ? "," : "") << buf;
    }
    out << "\n";
}

inline NormStats read_norm_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("missing norm stats file: " + path);
    std::string header, means, stds;
    if (!std::getline(in, header) || !std::getline(in, means) || !std::getline(in, stds))
        throw data_error(path + ": norm stats file must have header, means, stds rows");
    NormStats s;
    auto parse_row = [&](const std::string& line, std::array<double, kNumTabularFeatures>& out_arr) {
        auto cells = split(line, ',');
        if (cells.size() != kNumTabularFeatures)
            throw data_error(path + ": norm stats row has wrong cell count");
        for (int i = 0; i < kNumTabularFeatures; ++i) out_arr[i] = std::stod(cells[i]);
    };
    parse_row(means, s.mean);
    parse_row(stds, s.stddev);
    return s;
}

}  // namespace afnet
