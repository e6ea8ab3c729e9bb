#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "afnet/core/types.hpp"

namespace testutil {

// Fresh scratch directory per test, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("afnet_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline afnet::EcgRecord random_record(int n_samples, int n_leads, uint64_t seed,
                                      const std::string& id = "rec") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    afnet::EcgRecord r;
    r.record_id = id;
    r.n_samples = n_samples;
    r.fs = 500.0f;
    for (int i = 0; i < n_leads; ++i) r.leads.push_back(afnet::lead_from_ordinal(i));
    r.samples.resize(size_t(n_samples) * n_leads);
    for (auto& v : r.samples) v = u(rng);
    return r;
}

// Plausible exam features; every field varies with age so fitting
// normalization stats on distinct-age fixtures never sees a constant column.
inline afnet::TabularRecord sample_tabular(double age, double pr = 169) {
    const double d = age - 70.0;
    afnet::TabularRecord t;
    t.gender = afnet::Gender::M;
    t.age = age;
    t.p_axis = 59 + 0.3 * d;
    t.p_dur = 119 + 0.2 * d;
    t.p_onset = 283 + 0.5 * d;
    t.p_offset = 401 + 0.4 * d;
    t.pr_int = pr;
    t.qrs_axis = 18 + 0.7 * d;
    t.qrs_dur = 98 + 0.15 * d;
    t.qrs_onset = 453 + 0.25 * d;
    t.qrs_offset = 551 + 0.35 * d;
    t.qt_int = 393 + 0.6 * d;
    t.qtc_int = 415 + 0.45 * d;
    t.rr_interval = 831 + 1.5 * d;
    t.t_axis = 57 + 0.55 * d;
    t.t_offset = 845 + 0.65 * d;
    t.v_rate = 72 + 0.1 * d;
    return t;
}

}  // namespace testutil
