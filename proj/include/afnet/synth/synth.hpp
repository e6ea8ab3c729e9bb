#pragma once

// Synthetic 12-lead generator: an analytic three-wave beat template (Gaussian
// P, piecewise-linear QRS, Gaussian T) placed at jittered RR intervals, with
// per-lead projection weights, baseline-wander / power-line / white noise,
// and tabular features drawn from per-class median-and-IQR fits. The class
// knobs (P amplitude, PR, RR) control separability; the defaults plant the
// discriminative energy in the P band and make D1/avR the strongest leads.

#include <filesystem>
#include <random>

#include "afnet/core/io.hpp"
#include "afnet/core/types.hpp"

namespace afnet::synth {

struct BeatParams {
    double rr_mean_ms = 831;
    double rr_jitter_ms = 40;  // uniform +/- around the mean
    double p_amp_mv = 0.15;
    double p_width_ms = 22;  // Gaussian sigma
    double pr_int_ms = 169;  // P center precedes the R peak by this much
    double qrs_amp_mv = 1.0;
    double qrs_width_ms = 98;  // full span of the piecewise-linear complex
    double t_amp_mv = 0.30;
    double t_width_ms = 55;    // Gaussian sigma
    double t_offset_ms = 300;  // T center follows the R peak by this much

    double lead_in_ms() const { return pr_int_ms + 3 * p_width_ms; }
    double tail_ms() const { return t_offset_ms + 3 * t_width_ms; }

    void validate(const char* cls) const {
        auto bad = [&](const std::string& why) {
            throw data_error(std::string("synth params (") + cls + "): " + why);
        };
        if (!(rr_mean_ms > 0) || rr_jitter_ms < 0) bad("RR interval must be positive");
        if (!(p_width_ms > 0 && qrs_width_ms > 0 && t_width_ms > 0)) bad("wave widths must be positive");
        if (!(pr_int_ms - 3 * p_width_ms > qrs_width_ms / 2))
            bad("P wave overlaps the QRS complex");
        if (!(t_offset_ms - 3 * t_width_ms > qrs_width_ms / 2))
            bad("T wave overlaps the QRS complex");
        if (!(rr_mean_ms - rr_jitter_ms > lead_in_ms() + tail_ms()))
            bad("waves of adjacent beats overlap at the minimum RR interval");
    }
};

struct NoiseParams {
    double wander_amp_mv = 0.08;
    double wander_hz = 0.55;
    double powerline_amp_mv = 0.0;  // acquisition hardware already notches 50 Hz
    double powerline_hz = 50.0;
    double white_std_mv = 0.04;
};

struct SynthParams {
    BeatParams af0;
    BeatParams af1;
    NoiseParams noise;
    double fs = 500;
    double duration_s = 10;
    std::array<double, kNumLeads> p_lead_w = {1.0, 0.7,  0.4,  -0.9, 0.55, 0.5,
                                              0.35, 0.4, 0.45, 0.5,  0.55, 0.6};
    std::array<double, kNumLeads> qrs_lead_w = {1.0,  0.85, 0.5,  -0.95, 0.65, 0.55,
                                                0.45, 0.7,  0.75, 0.8,   0.85, 0.75};
    std::array<double, kNumLeads> t_lead_w = {0.8, 0.7, 0.4, -0.75, 0.55, 0.45,
                                              0.3, 0.5, 0.6, 0.7,   0.75, 0.65};

    static SynthParams defaults() {
        SynthParams p;
        p.af1.pr_int_ms = 179;
        p.af1.rr_mean_ms = 871;
        p.af1.p_amp_mv = p.af0.p_amp_mv * 0.7;
        return p;
    }

    const BeatParams& for_class(ClassLabel c) const { return c == ClassLabel::AF0 ? af0 : af1; }

    void validate() const {
        af0.validate("af0");
        af1.validate("af1");
        if (!(fs > 0) || !(duration_s > 0)) throw data_error("synth params: fs and duration must be positive");
    }
};

// Single-beat wave values at offset dt_s from the R peak, before lead
// projection.
inline double p_wave_at(const BeatParams& b, double dt_s) {
    double c = -b.pr_int_ms / 1000.0, s = b.p_width_ms / 1000.0;
    double z = (dt_s - c) / s;
    return b.p_amp_mv * std::exp(-0.5 * z * z);
}

inline double t_wave_at(const BeatParams& b, double dt_s) {
    double c = b.t_offset_ms / 1000.0, s = b.t_width_ms / 1000.0;
    double z = (dt_s - c) / s;
    return b.t_amp_mv * std::exp(-0.5 * z * z);
}

inline double qrs_at(const BeatParams& b, double dt_s) {
    // node points as fractions of the full width: Q dip, R peak, S dip
    static constexpr double kFrac[5] = {-0.5, -0.32, 0.0, 0.22, 0.5};
    static constexpr double kVal[5] = {0.0, -0.15, 1.0, -0.25, 0.0};
    double w = b.qrs_width_ms / 1000.0;
    double f = dt_s / w;
    if (f <= kFrac[0] || f >= kFrac[4]) return 0.0;
    for (int i = 1; i < 5; ++i)
        if (f <= kFrac[i]) {
            double u = (f - kFrac[i - 1]) / (kFrac[i] - kFrac[i - 1]);
            return b.qrs_amp_mv * (kVal[i - 1] + u * (kVal[i] - kVal[i - 1]));
        }
    return 0.0;
}

template <typename Rng>
EcgRecord synth_ecg(ClassLabel cls, const SynthParams& params, Rng& rng) {
    params.validate();
    const BeatParams& b = params.for_class(cls);
    const int n = int(std::lround(params.fs * params.duration_s));
    const int n_leads = kNumLeads;

    EcgRecord rec;
    rec.fs = float(params.fs);
    rec.n_samples = n;
    rec.leads = all_leads();
    rec.label = cls;
    rec.samples.assign(size_t(n) * n_leads, 0.0f);

    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    const double wander_phase = phase(rng);
    const double line_phase = phase(rng);

    std::uniform_real_distribution<double> jitter(-b.rr_jitter_ms, b.rr_jitter_ms);
    std::vector<double> r_times;
    double r = (b.lead_in_ms() + 20.0 + jitter(rng)) / 1000.0;
    const double horizon = params.duration_s + b.tail_ms() / 1000.0;
    while (r < horizon) {
        r_times.push_back(r);
        r += (b.rr_mean_ms + jitter(rng)) / 1000.0;
    }

    auto add_wave = [&](double center_s, double half_span_s, auto value_at,
                        const std::array<double, kNumLeads>& weights) {
        int t0 = std::max(0, int(std::ceil((center_s - half_span_s) * params.fs)));
        int t1 = std::min(n - 1, int(std::floor((center_s + half_span_s) * params.fs)));
        for (int t = t0; t <= t1; ++t) {
            double v = value_at(t / params.fs);
            if (v == 0.0) continue;
            float* row = rec.samples.data() + size_t(t) * n_leads;
            for (int l = 0; l < n_leads; ++l) row[l] += float(v * weights[l]);
        }
    };

    for (double rt : r_times) {
        add_wave(rt - b.pr_int_ms / 1000.0, 4.0 * b.p_width_ms / 1000.0,
                 [&](double t) { return p_wave_at(b, t - rt); }, params.p_lead_w);
        add_wave(rt, 0.5 * b.qrs_width_ms / 1000.0, [&](double t) { return qrs_at(b, t - rt); },
                 params.qrs_lead_w);
        add_wave(rt + b.t_offset_ms / 1000.0, 4.0 * b.t_width_ms / 1000.0,
                 [&](double t) { return t_wave_at(b, t - rt); }, params.t_lead_w);
    }

    const auto& nz = params.noise;
    if (nz.wander_amp_mv != 0 || nz.powerline_amp_mv != 0) {
        for (int t = 0; t < n; ++t) {
            double ts = t / params.fs;
            double common = nz.wander_amp_mv * std::sin(2.0 * M_PI * nz.wander_hz * ts + wander_phase) +
                            nz.powerline_amp_mv * std::sin(2.0 * M_PI * nz.powerline_hz * ts + line_phase);
            float* row = rec.samples.data() + size_t(t) * n_leads;
            for (int l = 0; l < n_leads; ++l) row[l] += float(common);
        }
    }
    if (nz.white_std_mv > 0) {
        std::normal_distribution<double> white(0.0, nz.white_std_mv);
        for (auto& v : rec.samples) v += float(white(rng));
    }
    return rec;
}

// Median/quartile table per class for the 16 numeric features (schema order
// after gender). Features whose lower quartile is positive are modeled
// log-normal (median- and IQR-matched); the axes, which can be negative, fall
// back to a normal fit and are clamped to the valid axis range.
struct FeatStat {
    double med, q1, q3;
};

inline const std::array<FeatStat, 16>& feature_stats(ClassLabel c) {
    static const std::array<FeatStat, 16> af0 = {{{75, 68, 81},
                                                  {59, 42, 71},
                                                  {119, 108, 127},
                                                  {283, 259, 302},
                                                  {401, 376, 419},
                                                  {169, 152, 189},
                                                  {18, -17, 54},
                                                  {98, 89, 111},
                                                  {453, 446, 458},
                                                  {551, 543, 559},
                                                  {393, 369, 420},
                                                  {415, 399, 434},
                                                  {831, 727, 944},
                                                  {57, 36, 73},
                                                  {845, 821, 870},
                                                  {72, 63, 82}}};
    static const std::array<FeatStat, 16> af1 = {{{76, 70, 81},
                                                  {61, 42, 74},
                                                  {118, 100, 130},
                                                  {270, 241, 293},
                                                  {386, 355, 411},
                                                  {179, 159, 202},
                                                  {13, -24, 51},
                                                  {102, 92, 120},
                                                  {450, 443, 457},
                                                  {553, 545, 565},
                                                  {406, 381, 433},
                                                  {421, 405, 441},
                                                  {871, 766, 986},
                                                  {59, 33, 78},
                                                  {855, 831, 880},
                                                  {68, 60, 78}}};
    return c == ClassLabel::AF0 ? af0 : af1;
}

inline double male_fraction(ClassLabel c) { return c == ClassLabel::AF0 ? 0.531 : 0.574; }

template <typename Rng>
TabularRecord synth_tabular(ClassLabel cls, Rng& rng) {
    constexpr double z75 = 0.6744897501960817;  // standard normal upper quartile
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::array<double, kNumTabularFeatures> f{};
    f[0] = unif(rng) < male_fraction(cls) ? 1.0 : 0.0;
    const auto& stats = feature_stats(cls);
    for (int i = 0; i < 16; ++i) {
        const FeatStat& st = stats[i];
        double z = gauss(rng);
        double v;
        if (st.q1 > 0) {
            double sigma = std::log(st.q3 / st.q1) / (2.0 * z75);
            v = std::exp(std::log(st.med) + sigma * z);
        } else {
            double sigma = (st.q3 - st.q1) / (2.0 * z75);
            v = st.med + sigma * z;
        }
        const char* name = kTabularFeatureNames[i + 1];
        bool is_axis = !std::strcmp(name, "P_AXIS") || !std::strcmp(name, "QRS_AXIS") ||
                       !std::strcmp(name, "T_AXIS");
        if (is_axis) v = std::clamp(v, -180.0, 360.0);
        f[i + 1] = v;
    }
    return TabularRecord::from_features(f);
}

inline uint64_t record_seed(uint64_t dataset_seed, ClassLabel cls, int index) {
    return fnv1a64(strf("%llu/%s/%d", (unsigned long long)dataset_seed,
                        cls == ClassLabel::AF0 ? "af0" : "af1", index));
}

inline std::string serialize_synth_params(const SynthParams& p) {
    std::string s;
    auto beat = [&](const char* cls, const BeatParams& b) {
        s += strf("%s.rr_mean_ms=%.10g\n", cls, b.rr_mean_ms);
        s += strf("%s.rr_jitter_ms=%.10g\n", cls, b.rr_jitter_ms);
        s += strf("%s.p_amp_mv=%.10g\n", cls, b.p_amp_mv);
        s += strf("%s.p_width_ms=%.10g\n", cls, b.p_width_ms);
        s += strf("%s.pr_int_ms=%.10g\n", cls, b.pr_int_ms);
        s += strf("%s.qrs_amp_mv=%.10g\n", cls, b.qrs_amp_mv);
        s += strf("%s.qrs_width_ms=%.10g\n", cls, b.qrs_width_ms);
        s += strf("%s.t_amp_mv=%.10g\n", cls, b.t_amp_mv);
        s += strf("%s.t_width_ms=%.10g\n", cls, b.t_width_ms);
        s += strf("%s.t_offset_ms=%.10g\n", cls, b.t_offset_ms);
    };
    s += strf("fs=%.10g\n", p.fs);
    s += strf("duration_s=%.10g\n", p.duration_s);
    beat("af0", p.af0);
    beat("af1", p.af1);
    s += strf("noise.wander_amp_mv=%.10g\n", p.noise.wander_amp_mv);
    s += strf("noise.wander_hz=%.10g\n", p.noise.wander_hz);
    s += strf("noise.powerline_amp_mv=%.10g\n", p.noise.powerline_amp_mv);
    s += strf("noise.powerline_hz=%.10g\n", p.noise.powerline_hz);
    s += strf("noise.white_std_mv=%.10g\n", p.noise.white_std_mv);
    auto weights = [&](const char* name, const std::array<double, kNumLeads>& w) {
        s += name;
        s += "=";
        for (int i = 0; i < kNumLeads; ++i) s += strf(i ? ",%.10g" : "%.10g", w[i]);
        s += "\n";
    };
    weights("p_lead_w", p.p_lead_w);
    weights("qrs_lead_w", p.qrs_lead_w);
    weights("t_lead_w", p.t_lead_w);
    return s;
}

inline SynthParams parse_synth_params(const std::string& text,
                                      SynthParams base = SynthParams::defaults()) {
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) throw data_error("synth params: missing '=' in: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        auto beat_field = [&](BeatParams& b, const std::string& f) -> double* {
            if (f == "rr_mean_ms") return &b.rr_mean_ms;
            if (f == "rr_jitter_ms") return &b.rr_jitter_ms;
            if (f == "p_amp_mv") return &b.p_amp_mv;
            if (f == "p_width_ms") return &b.p_width_ms;
            if (f == "pr_int_ms") return &b.pr_int_ms;
            if (f == "qrs_amp_mv") return &b.qrs_amp_mv;
            if (f == "qrs_width_ms") return &b.qrs_width_ms;
            if (f == "t_amp_mv") return &b.t_amp_mv;
            if (f == "t_width_ms") return &b.t_width_ms;
            if (f == "t_offset_ms") return &b.t_offset_ms;
            return nullptr;
        };
        double* slot = nullptr;
        if (key.rfind("af0.", 0) == 0) slot = beat_field(base.af0, key.substr(4));
        else if (key.rfind("af1.", 0) == 0) slot = beat_field(base.af1, key.substr(4));
        else if (key == "fs") slot = &base.fs;
        else if (key == "duration_s") slot = &base.duration_s;
        else if (key == "noise.wander_amp_mv") slot = &base.noise.wander_amp_mv;
        else if (key == "noise.wander_hz") slot = &base.noise.wander_hz;
        else if (key == "noise.powerline_amp_mv") slot = &base.noise.powerline_amp_mv;
        else if (key == "noise.powerline_hz") slot = &base.noise.powerline_hz;
        else if (key == "noise.white_std_mv") slot = &base.noise.white_std_mv;
        if (slot) {
            *slot = std::stod(val);
            continue;
        }
        std::array<double, kNumLeads>* warr = nullptr;
        if (key == "p_lead_w") warr = &base.p_lead_w;
        else if (key == "qrs_lead_w") warr = &base.qrs_lead_w;
        else if (key == "t_lead_w") warr = &base.t_lead_w;
        if (!warr) throw data_error("synth params: unknown key: " + key);
        auto cells = split(val, ',');
        if (cells.size() != kNumLeads)
            throw data_error("synth params: " + key + strf(" needs %d values", kNumLeads));
        for (int i = 0; i < kNumLeads; ++i) (*warr)[i] = std::stod(cells[i]);
    }
    return base;
}

// Deterministic labeled dataset: waveform files plus the linking manifest and
// a provenance copy of the generator parameters.
inline Manifest synth_dataset(int n_af0, int n_af1, uint64_t seed, const std::string& out_dir,
                              const SynthParams& params = SynthParams::defaults()) {
    if (n_af0 < 1 || n_af1 < 1) throw data_error("synth_dataset: class counts must be >= 1");
    params.validate();
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "waves");

    Manifest manifest;
    auto emit = [&](ClassLabel cls, int count, const char* prefix) {
        for (int i = 0; i < count; ++i) {
            std::mt19937_64 rng(record_seed(seed, cls, i));
            EcgRecord rec = synth_ecg(cls, params, rng);
            rec.record_id = strf("%s_%05d", prefix, i);
            std::string path = (fs::path(out_dir) / "waves" / (rec.record_id + ".ecg")).string();
            write_ecg(rec, path);
            ManifestRow row;
            row.record_id = rec.record_id;
            row.path = path;
            row.label = cls;
            row.tabular = synth_tabular(cls, rng);
            manifest.rows.push_back(std::move(row));
        }
    };
    emit(ClassLabel::AF0, n_af0, "af0");
    emit(ClassLabel::AF1, n_af1, "af1");

    write_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
    std::ofstream pf((fs::path(out_dir) / "synth_params.txt").string(), std::ios::trunc);
    pf << serialize_synth_params(params);
    return manifest;
}

}  // namespace afnet::synth
