#pragma once

// Butterworth IIR design (low-pass and band-pass) as cascaded second-order
// sections, plus causal filtering and half-rate decimation.
//
// Design path: analog prototype poles -> frequency transform in the analog
// domain -> bilinear transform with cutoff prewarping -> conjugate-pair
// grouping into normalized biquads.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "afnet/common.hpp"

namespace afnet::dsp {

struct BandSpec {
    double low_hz = 0;
    double high_hz = 0;

    std::string name() const { return strf("%g-%g", low_hz, high_hz); }
};

// The band catalog exercised by the band ablation, in fixed order.
inline const std::vector<BandSpec>& band_catalog() {
    static const std::vector<BandSpec> bands = {{5, 50},  {5, 20},  {20, 35}, {35, 50},
                                                {5, 10},  {10, 15}, {15, 20}};
    return bands;
}

struct SosSection {
    double b0 = 0, b1 = 0, b2 = 0;  // numerator
    double a1 = 0, a2 = 0;          // denominator, a0 normalized to 1
};

struct SosFilter {
    std::vector<SosSection> sections;
    double fs = 0;
    int order = 0;
    std::string design;  // e.g. "bandpass 5-50" or "lowpass 200"

    bool operator==(const SosFilter& o) const {
        if (sections.size() != o.sections.size() || fs != o.fs) return false;
        for (size_t i = 0; i < sections.size(); ++i) {
            const auto &a = sections[i], &b = o.sections[i];
            if (a.b0 != b.b0 || a.b1 != b.b1 || a.b2 != b.b2 || a.a1 != b.a1 || a.a2 != b.a2)
                return false;
        }
        return true;
    }
};

namespace detail {

using cplx = std::complex<double>;

struct Zpk {
    std::vector<cplx> zeros, poles;
    double gain = 1.0;
};

inline std::vector<cplx> butterworth_poles(int order) {
    std::vector<cplx> poles;
    poles.reserve(order);
    for (int k = 1; k <= order; ++k) {
        double theta = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
        poles.emplace_back(std::cos(theta), std::sin(theta));
    }
    return poles;
}

inline double prewarp(double freq_hz, double fs) {
    return 2.0 * fs * std::tan(M_PI * freq_hz / fs);
}

inline Zpk lowpass_to_bandpass(const Zpk& lp, double w_center, double bandwidth) {
    Zpk bp;
    bp.gain = lp.gain * std::pow(bandwidth, double(lp.poles.size() - lp.zeros.size()));
    auto transform = [&](const cplx& s) {
        cplx half = s * bandwidth / 2.0;
        cplx root = std::sqrt(half * half - w_center * w_center);
        return std::pair<cplx, cplx>{half + root, half - root};
    };
    for (const auto& z : lp.zeros) {
        auto [z1, z2] = transform(z);
        bp.zeros.push_back(z1);
        bp.zeros.push_back(z2);
    }
    for (const auto& p : lp.poles) {
        auto [p1, p2] = transform(p);
        bp.poles.push_back(p1);
        bp.poles.push_back(p2);
    }
    // Degree-difference zeros of the transform land at s = 0.
    for (size_t i = lp.zeros.size(); i < lp.poles.size(); ++i) bp.zeros.emplace_back(0.0, 0.0);
    return bp;
}

inline Zpk lowpass_scale(const Zpk& lp, double w_cut) {
    Zpk out;
    out.gain = lp.gain * std::pow(w_cut, double(lp.poles.size() - lp.zeros.size()));
    for (const auto& z : lp.zeros) out.zeros.push_back(z * w_cut);
    for (const auto& p : lp.poles) out.poles.push_back(p * w_cut);
    return out;
}

inline Zpk bilinear(const Zpk& analog, double fs) {
    const double fs2 = 2.0 * fs;
    Zpk digital;
    cplx num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& z : analog.zeros) {
        digital.zeros.push_back((fs2 + z) / (fs2 - z));
        num *= (fs2 - z);
    }
    for (const auto& p : analog.poles) {
        digital.poles.push_back((fs2 + p) / (fs2 - p));
        den *= (fs2 - p);
    }
    // Zeros at analog infinity map to z = -1.
    for (size_t i = analog.zeros.size(); i < analog.poles.size(); ++i)
        digital.zeros.emplace_back(-1.0, 0.0);
    digital.gain = analog.gain * (num / den).real();
    return digital;
}

// Group conjugate pole pairs into biquads and hand each section two of the
// remaining zeros (one from +1 and one from -1 when both are stocked, as in a
// band-pass; otherwise two alike, as in a low-pass).
inline SosFilter zpk_to_sos(const Zpk& zpk, double fs, int order, std::string design) {
    constexpr double imag_tol = 1e-9;
    std::vector<cplx> pair_reps;
    std::vector<double> real_poles;
    for (const auto& p : zpk.poles) {
        if (p.imag() > imag_tol)
            pair_reps.push_back(p);
        else if (std::abs(p.imag()) <= imag_tol)
            real_poles.push_back(p.real());
    }
    std::sort(pair_reps.begin(), pair_reps.end(),
              [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
    std::sort(real_poles.begin(), real_poles.end());
    if (real_poles.size() % 2 != 0)
        throw numeric_error("odd real pole count; only even filter orders are supported");

    std::vector<cplx> zero_bins[2];  // 0: near +1 (or other), 1: near -1
    for (const auto& z : zpk.zeros) (z.real() < 0 ? zero_bins[1] : zero_bins[0]).push_back(z);

    auto take_zero_pair = [&]() -> std::pair<cplx, cplx> {
        if (!zero_bins[0].empty() && !zero_bins[1].empty()) {
            cplx z1 = zero_bins[0].back(), z2 = zero_bins[1].back();
            zero_bins[0].pop_back();
            zero_bins[1].pop_back();
            return {z1, z2};
        }
        for (auto& bin : zero_bins) {
            if (bin.size() >= 2) {
                cplx z1 = bin.back();
                bin.pop_back();
                cplx z2 = bin.back();
                bin.pop_back();
                return {z1, z2};
            }
        }
        throw numeric_error("zero/pole bookkeeping mismatch in sos pairing");
    };

    size_t n_sections = pair_reps.size() + real_poles.size() / 2;
    if (zpk.zeros.size() != 2 * n_sections)
        throw numeric_error("designs with fewer zeros than poles per section are not supported");

    double section_gain = std::pow(std::abs(zpk.gain), 1.0 / double(n_sections));
    double sign = zpk.gain < 0 ? -1.0 : 1.0;

    SosFilter f;
    f.fs = fs;
    f.order = order;
    f.design = std::move(design);
    auto push_section = [&](double a1, double a2) {
        auto [z1, z2] = take_zero_pair();
        double g = section_gain * sign;
        sign = 1.0;
        SosSection s;
        s.b0 = g;
        s.b1 = -g * (z1 + z2).real();
        s.b2 = g * (z1 * z2).real();
        s.a1 = a1;
        s.a2 = a2;
        f.sections.push_back(s);
    };
    for (const auto& p : pair_reps) push_section(-2.0 * p.real(), std::norm(p));
    for (size_t i = 0; i + 1 < real_poles.size(); i += 2)
        push_section(-(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]);

    for (const auto& s : f.sections) {
        double disc = s.a1 * s.a1 - 4.0 * s.a2;
        double pole_mag = disc < 0 ? std::sqrt(s.a2)
                                   : std::max(std::abs((-s.a1 + std::sqrt(disc)) / 2.0),
                                              std::abs((-s.a1 - std::sqrt(disc)) / 2.0));
        if (!(pole_mag < 1.0))
            throw numeric_error(strf("unstable section in %s design (pole magnitude %.6f)",
                                     f.design.c_str(), pole_mag));
    }
    return f;
}

}  // namespace detail

inline SosFilter design_butterworth_bandpass(const BandSpec& band, double fs, int order = 4) {
    if (!(fs > 0)) throw data_error("sampling rate must be positive");
    if (!(band.low_hz > 0)) throw data_error(strf("band low cutoff must be > 0, got %g", band.low_hz));
    if (!(band.high_hz < fs / 2))
        throw data_error(strf("band high cutoff %g must be below Nyquist %g", band.high_hz, fs / 2));
    if (!(band.low_hz < band.high_hz))
        throw data_error(strf("band cutoffs must satisfy low < high, got [%g, %g]", band.low_hz,
                              band.high_hz));
    if (order < 2 || order % 2 != 0) throw data_error("band-pass order must be a positive even integer");

    detail::Zpk proto;
    proto.poles = detail::butterworth_poles(order);
    double w1 = detail::prewarp(band.low_hz, fs);
    double w2 = detail::prewarp(band.high_hz, fs);
    detail::Zpk analog = detail::lowpass_to_bandpass(proto, std::sqrt(w1 * w2), w2 - w1);
    detail::Zpk digital = detail::bilinear(analog, fs);
    return detail::zpk_to_sos(digital, fs, order, "bandpass " + band.name());
}

inline SosFilter design_butterworth_lowpass(double cutoff_hz, double fs, int order = 8) {
    if (!(fs > 0)) throw data_error("sampling rate must be positive");
    if (!(cutoff_hz > 0 && cutoff_hz < fs / 2))
        throw data_error(strf("low-pass cutoff %g must lie in (0, %g)", cutoff_hz, fs / 2));
    if (order < 2 || order % 2 != 0) throw data_error("low-pass order must be a positive even integer");

    detail::Zpk proto;
    proto.poles = detail::butterworth_poles(order);
    detail::Zpk analog = detail::lowpass_scale(proto, detail::prewarp(cutoff_hz, fs));
    detail::Zpk digital = detail::bilinear(analog, fs);
    return detail::zpk_to_sos(digital, fs, order, strf("lowpass %g", cutoff_hz));
}

inline double frequency_response(const SosFilter& f, double freq_hz) {
    if (freq_hz < 0 || freq_hz > f.fs / 2)
        throw data_error(strf("frequency %g outside [0, %g]", freq_hz, f.fs / 2));
    std::complex<double> e1 = std::polar(1.0, -2.0 * M_PI * freq_hz / f.fs);
    std::complex<double> e2 = e1 * e1;
    double mag = 1.0;
    for (const auto& s : f.sections) {
        std::complex<double> num = s.b0 + s.b1 * e1 + s.b2 * e2;
        std::complex<double> den = 1.0 + s.a1 * e1 + s.a2 * e2;
        mag *= std::abs(num) / std::abs(den);
    }
    return mag;
}

// Causal single-pass direct-form-II-transposed cascade, zero initial state.
template <typename S>
std::vector<S> apply_sos(const SosFilter& f, const std::vector<S>& signal) {
    if (signal.empty()) throw data_error("apply_sos: empty signal");
    std::vector<double> y(signal.begin(), signal.end());
    for (const auto& s : f.sections) {
        double s1 = 0.0, s2 = 0.0;
        for (double& v : y) {
            double x = v;
            double out = s.b0 * x + s1;
            s1 = s.b1 * x - s.a1 * out + s2;
            s2 = s.b2 * x - s.a2 * out;
            v = out;
        }
    }
    return std::vector<S>(y.begin(), y.end());
}

inline std::string sos_to_csv(const SosFilter& f) {
    std::string out;
    for (const auto& s : f.sections)
        out += strf("%.17g,%.17g,%.17g,%.17g,%.17g\n", s.b0, s.b1, s.b2, s.a1, s.a2);
    return out;
}

template <typename S>
struct DecimateResult {
    std::vector<S> samples;
    double fs = 0;
    bool trailing_sample_dropped = false;
};

// Halve the sampling rate: 8th-order Butterworth anti-alias low-pass at
// 0.8x the target Nyquist, then keep every second sample.
template <typename S>
DecimateResult<S> decimate_by_two(const std::vector<S>& signal, double fs) {
    if (!(fs > 0)) throw data_error("decimate_by_two: sampling rate must be positive");
    if (signal.empty()) throw data_error("decimate_by_two: empty signal");
    SosFilter aa = design_butterworth_lowpass(0.8 * (fs / 4.0), fs, 8);
    std::vector<S> filtered = apply_sos(aa, signal);
    DecimateResult<S> out;
    out.fs = fs / 2.0;
    size_t n = filtered.size();
    if (n % 2 != 0) {
        --n;
        out.trailing_sample_dropped = true;
    }
    out.samples.reserve(n / 2);
    for (size_t i = 0; i < n; i += 2) out.samples.push_back(filtered[i]);
    return out;
}

}  // namespace afnet::dsp
