#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "afnet/dsp/butterworth.hpp"

using namespace afnet;
using namespace afnet::dsp;

namespace {

// Root-finding oracle: largest pole magnitude of a biquad denominator.
double max_pole_magnitude(const SosSection& s) {
    std::complex<double> a1(s.a1, 0), a2(s.a2, 0);
    std::complex<double> disc = std::sqrt(a1 * a1 - 4.0 * a2);
    std::complex<double> r1 = (-a1 + disc) / 2.0, r2 = (-a1 - disc) / 2.0;
    return std::max(std::abs(r1), std::abs(r2));
}

double passband_peak(const SosFilter& f) {
    double peak = 0;
    for (double fr = 0.0; fr <= f.fs / 2; fr += 0.05) peak = std::max(peak, frequency_response(f, fr));
    return peak;
}

double db(double mag) { return 20.0 * std::log10(mag); }

std::vector<float> sine(double freq, double fs, int n, double amp = 1.0) {
    std::vector<float> v(n);
    for (int i = 0; i < n; ++i) v[i] = float(amp * std::sin(2.0 * M_PI * freq * i / fs));
    return v;
}

// Amplitude of a zero-mean sinusoid from its RMS over a window.
double rms_amplitude(const std::vector<float>& v, size_t from) {
    double acc = 0;
    for (size_t i = from; i < v.size(); ++i) acc += double(v[i]) * v[i];
    return std::sqrt(2.0 * acc / double(v.size() - from));
}

}  // namespace

TEST_CASE("band catalog holds the seven bands in order", "[dsp]") {
    const auto& cat = band_catalog();
    REQUIRE(cat.size() == 7);
    std::vector<std::string> names;
    for (const auto& b : cat) names.push_back(b.name());
    REQUIRE(names == std::vector<std::string>{"5-50", "5-20", "20-35", "35-50", "5-10", "10-15",
                                              "15-20"});
}

TEST_CASE("band-pass design hits the -3 dB edges", "[dsp]") {
    SosFilter f = design_butterworth_bandpass({5, 50}, 500, 4);
    REQUIRE(f.sections.size() == 4);  // order 4 band-pass = 8 poles
    double peak = passband_peak(f);
    double edge_lo = db(frequency_response(f, 5.0) / peak);
    double edge_hi = db(frequency_response(f, 50.0) / peak);
    REQUIRE_THAT(edge_lo, Catch::Matchers::WithinAbs(-3.01, 0.2));
    REQUIRE_THAT(edge_hi, Catch::Matchers::WithinAbs(-3.01, 0.2));
}

TEST_CASE("band-pass kills DC and Nyquist", "[dsp]") {
    for (const auto& band : band_catalog()) {
        SosFilter f = design_butterworth_bandpass(band, 500, 4);
        REQUIRE(frequency_response(f, 0.0) < 1e-3);
        REQUIRE(frequency_response(f, 250.0) < 1e-3);
    }
}

TEST_CASE("designed poles stay inside the unit circle", "[dsp]") {
    SosFilter f = design_butterworth_bandpass({5, 20}, 500, 4);
    for (const auto& s : f.sections) REQUIRE(max_pole_magnitude(s) < 1.0);
}

TEST_CASE("stability holds over randomized valid bands", "[dsp]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lo_d(0.5, 100.0), width_d(1.0, 120.0);
    for (int trial = 0; trial < 60; ++trial) {
        double lo = lo_d(rng);
        double hi = std::min(lo + width_d(rng), 245.0);
        SosFilter f = design_butterworth_bandpass({lo, hi}, 500, 4);
        for (const auto& s : f.sections) REQUIRE(max_pole_magnitude(s) < 1.0);
    }
}

TEST_CASE("design rejects invalid bands", "[dsp]") {
    REQUIRE_THROWS_AS(design_butterworth_bandpass({0, 50}, 500), data_error);
    REQUIRE_THROWS_AS(design_butterworth_bandpass({5, 250}, 500), data_error);
    REQUIRE_THROWS_AS(design_butterworth_bandpass({50, 5}, 500), data_error);
    REQUIRE_THROWS_AS(design_butterworth_bandpass({5, 50}, 500, 3), data_error);
}

TEST_CASE("frequency response basics", "[dsp]") {
    SECTION("identity filter is exactly 1 everywhere") {
        SosFilter ident;
        ident.fs = 500;
        ident.sections.push_back({1, 0, 0, 0, 0});
        for (double fr : {0.0, 10.0, 100.0, 250.0}) REQUIRE(frequency_response(ident, fr) == 1.0);
    }
    SECTION("maximally flat near the geometric mid-band") {
        SosFilter f = design_butterworth_bandpass({5, 50}, 500, 4);
        double peak = passband_peak(f);
        double mid = frequency_response(f, std::sqrt(5.0 * 50.0));
        REQUIRE(mid / peak >= 0.99);
        REQUIRE(mid / peak <= 1.0 + 1e-9);
    }
    SECTION("frequency outside [0, fs/2] is rejected") {
        SosFilter f = design_butterworth_bandpass({5, 50}, 500, 4);
        REQUIRE_THROWS_AS(frequency_response(f, -1.0), data_error);
        REQUIRE_THROWS_AS(frequency_response(f, 251.0), data_error);
    }
}

TEST_CASE("monotone rolloff away from the passband peak", "[dsp]") {
    for (const auto& band : band_catalog()) {
        SosFilter f = design_butterworth_bandpass(band, 500, 4);
        std::vector<double> mag;
        for (int fr = 0; fr <= 250; ++fr) mag.push_back(frequency_response(f, double(fr)));
        size_t peak = std::max_element(mag.begin(), mag.end()) - mag.begin();
        for (size_t i = 1; i <= peak; ++i) REQUIRE(mag[i] >= mag[i - 1] - 1e-6);
        for (size_t i = peak + 1; i < mag.size(); ++i) REQUIRE(mag[i] <= mag[i - 1] + 1e-6);
    }
}

TEST_CASE("apply_sos is causal, zero-state and length-preserving", "[dsp]") {
    SosFilter f = design_butterworth_bandpass({5, 20}, 500, 4);

    SECTION("all-zero input gives all-zero output") {
        std::vector<float> zeros(1000, 0.0f);
        auto out = apply_sos(f, zeros);
        REQUIRE(out.size() == zeros.size());
        for (float v : out) REQUIRE(v == 0.0f);
    }
    SECTION("constant input decays to (near) zero") {
        std::vector<float> c(5000, 3.5f);
        auto out = apply_sos(f, c);
        REQUIRE(std::abs(out.back()) < 1e-3 * 3.5);
    }
    SECTION("empty signal is an error") {
        std::vector<float> empty;
        REQUIRE_THROWS_AS(apply_sos(f, empty), data_error);
    }
}

TEST_CASE("filtered sine amplitude matches the transfer function", "[dsp]") {
    SosFilter f = design_butterworth_bandpass({5, 20}, 500, 4);
    auto x = sine(50.0, 500.0, 5000);
    auto y = apply_sos(f, x);
    double predicted = frequency_response(f, 50.0);
    double measured = rms_amplitude(y, y.size() - 1000);
    REQUIRE_THAT(measured, Catch::Matchers::WithinRel(predicted, 0.05));
}

TEST_CASE("apply_sos is linear", "[dsp]") {
    SosFilter f = design_butterworth_bandpass({5, 50}, 500, 4);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<float> x(2000), y(2000), mix(2000);
    const float a = 1.7f, b = -0.6f;
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = u(rng);
        y[i] = u(rng);
        mix[i] = a * x[i] + b * y[i];
    }
    auto fx = apply_sos(f, x);
    auto fy = apply_sos(f, y);
    auto fmix = apply_sos(f, mix);
    double scale = 0;
    for (size_t i = 0; i < x.size(); ++i) scale = std::max(scale, std::abs(double(fmix[i])));
    for (size_t i = 0; i < x.size(); ++i)
        REQUIRE(std::abs(double(fmix[i]) - (a * double(fx[i]) + b * double(fy[i]))) <=
                1e-5 * std::max(1.0, scale));
}

TEST_CASE("decimation halves rate and length", "[dsp]") {
    SECTION("10000 samples at 1 kHz become 5000 at 500 Hz") {
        auto x = sine(7.0, 1000.0, 10000);
        auto out = decimate_by_two(x, 1000.0);
        REQUIRE(out.samples.size() == 5000);
        REQUIRE(out.fs == 500.0);
        REQUIRE_FALSE(out.trailing_sample_dropped);
    }
    SECTION("odd length drops the trailing sample with a flag") {
        std::vector<float> x(10001, 0.25f);
        auto out = decimate_by_two(x, 1000.0);
        REQUIRE(out.samples.size() == 5000);
        REQUIRE(out.trailing_sample_dropped);
    }
    SECTION("constant signal is preserved after the transient") {
        std::vector<float> x(4000, 1.25f);
        auto out = decimate_by_two(x, 1000.0);
        for (size_t i = 50; i < out.samples.size(); ++i)
            REQUIRE_THAT(double(out.samples[i]), Catch::Matchers::WithinAbs(1.25, 1e-4));
    }
    SECTION("10 Hz sine keeps unit amplitude within 1%") {
        auto x = sine(10.0, 1000.0, 10000);
        auto out = decimate_by_two(x, 1000.0);
        std::vector<float> steady(out.samples.begin() + 100, out.samples.end());
        double amp = rms_amplitude(steady, 0);
        REQUIRE_THAT(amp, Catch::Matchers::WithinRel(1.0, 0.01));
    }
    SECTION("bad inputs are rejected") {
        std::vector<float> x(10, 0.0f);
        REQUIRE_THROWS_AS(decimate_by_two(x, 0.0), data_error);
        std::vector<float> empty;
        REQUIRE_THROWS_AS(decimate_by_two(empty, 1000.0), data_error);
    }
}

TEST_CASE("coefficients export one section per row", "[dsp]") {
    SosFilter f = design_butterworth_bandpass({5, 50}, 500, 4);
    std::string csv = sos_to_csv(f);
    auto lines = split(csv, '\n');
    REQUIRE(lines.size() == 5);  // 4 sections + trailing newline split
    for (int i = 0; i < 4; ++i) {
        auto cells = split(lines[i], ',');
        REQUIRE(cells.size() == 5);
        REQUIRE(std::stod(cells[0]) == f.sections[i].b0);
        REQUIRE(std::stod(cells[3]) == f.sections[i].a1);
    }
}
