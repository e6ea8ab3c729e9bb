#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "afnet/pipeline/dataset.hpp"
#include "afnet/pipeline/splits.hpp"
#include "support/helpers.hpp"

using namespace afnet;
using Catch::Matchers::ContainsSubstring;

namespace {

Manifest fake_manifest(int n_af0, int n_af1) {
    Manifest m;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.9, 1.1);
    auto add = [&](ClassLabel cls, int count, const char* prefix) {
        for (int i = 0; i < count; ++i) {
            ManifestRow r;
            r.record_id = strf("%s%06d", prefix, i);
            r.path = "placeholder.ecg";
            r.label = cls;
            r.tabular = testutil::sample_tabular(60 + 20 * u(rng), 160 * u(rng));
            if (i % 2) r.tabular.gender = Gender::F;
            m.rows.push_back(std::move(r));
        }
    };
    add(ClassLabel::AF0, n_af0, "n");
    add(ClassLabel::AF1, n_af1, "p");
    return m;
}

std::vector<std::string> ids_of(const Manifest& m, bool strip = false) {
    std::vector<std::string> out;
    for (const auto& r : m.rows) out.push_back(strip ? strip_shift_suffix(r.record_id) : r.record_id);
    return out;
}

}  // namespace

TEST_CASE("random shift pads one side and truncates the other", "[pipeline]") {
    auto rec = testutil::random_record(1200, 3, 21, "shift");
    std::mt19937_64 rng(77);
    EcgRecord out = random_shift(rec, rng);
    auto draw = parse_shift_suffix(out.record_id);
    REQUIRE(draw.has_value());
    int s = draw->amount;
    REQUIRE(s >= 250);
    REQUIRE(s <= 500);
    REQUIRE(out.n_samples == rec.n_samples);
    REQUIRE(out.n_leads() == rec.n_leads());
    REQUIRE(out.fs == rec.fs);
    REQUIRE(out.label == rec.label);

    const int n = rec.n_samples, c = rec.n_leads();
    if (draw->side == ShiftSide::Begin) {
        for (int t = 0; t < s; ++t)
            for (int j = 0; j < c; ++j) REQUIRE(out.at(t, j) == 0.0f);
        for (int t = s; t < n; ++t)
            for (int j = 0; j < c; ++j) REQUIRE(out.at(t, j) == rec.at(t - s, j));
    } else {
        for (int t = 0; t < n - s; ++t)
            for (int j = 0; j < c; ++j) REQUIRE(out.at(t, j) == rec.at(t + s, j));
        for (int t = n - s; t < n; ++t)
            for (int j = 0; j < c; ++j) REQUIRE(out.at(t, j) == 0.0f);
    }
}

TEST_CASE("cross-correlation locates the drawn shift", "[pipeline]") {
    auto rec = testutil::random_record(1500, 1, 33, "xcorr");
    ShiftDraw d{ShiftSide::Begin, 321};
    EcgRecord out = apply_shift(rec, d);
    // brute-force cross-correlation over lags 0..500
    double best = -1e30;
    int best_lag = -1;
    for (int lag = 0; lag <= 500; ++lag) {
        double acc = 0;
        for (int t = lag; t < rec.n_samples; ++t) acc += double(out.at(t, 0)) * rec.at(t - lag, 0);
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    REQUIRE(best_lag == 321);
}

TEST_CASE("shift rejects too-short records", "[pipeline]") {
    auto rec = testutil::random_record(500, 1, 3, "short");
    std::mt19937_64 rng(1);
    REQUIRE_THROWS_AS(random_shift(rec, rng), data_error);
}

TEST_CASE("lead selection projects columns in the requested order", "[pipeline]") {
    auto rec = testutil::random_record(100, 12, 8, "leads");

    SECTION("all leads in canonical order is the identity") {
        EcgRecord same = select_leads(rec, all_leads());
        REQUIRE(same.samples == rec.samples);
    }
    SECTION("single lead avR") {
        EcgRecord avr = select_leads(rec, {Lead::avR});
        REQUIRE(avr.n_leads() == 1);
        for (int t = 0; t < rec.n_samples; ++t) REQUIRE(avr.at(t, 0) == rec.at(t, 3));
    }
    SECTION("pair D1, avR keeps order") {
        EcgRecord two = select_leads(rec, {Lead::D1, Lead::avR});
        REQUIRE(two.n_leads() == 2);
        for (int t = 0; t < rec.n_samples; ++t) {
            REQUIRE(two.at(t, 0) == rec.at(t, 0));
            REQUIRE(two.at(t, 1) == rec.at(t, 3));
        }
    }
    SECTION("missing lead is an error") {
        EcgRecord one = select_leads(rec, {Lead::D1});
        REQUIRE_THROWS_WITH(select_leads(one, {Lead::v3}), ContainsSubstring("v3"));
    }
}

TEST_CASE("per-record standardization", "[pipeline]") {
    SECTION("tiled {1,3} maps to tiled {-1,+1}") {
        EcgRecord rec;
        rec.record_id = "tiled";
        rec.fs = 500;
        rec.n_samples = 10;
        rec.leads = {Lead::D1};
        for (int t = 0; t < 10; ++t) rec.samples.push_back(t % 2 ? 3.0f : 1.0f);
        EcgRecord out = standardize_ecg(rec);
        for (int t = 0; t < 10; ++t) REQUIRE(out.at(t, 0) == (t % 2 ? 1.0f : -1.0f));
    }
    SECTION("already standardized lead is unchanged") {
        EcgRecord rec;
        rec.record_id = "std";
        rec.fs = 500;
        rec.n_samples = 4;
        rec.leads = {Lead::D1};
        rec.samples = {-1.0f, 1.0f, -1.0f, 1.0f};
        EcgRecord out = standardize_ecg(rec);
        for (int t = 0; t < 4; ++t)
            REQUIRE_THAT(double(out.at(t, 0)), Catch::Matchers::WithinAbs(rec.at(t, 0), 1e-6));
    }
    SECTION("constant lead maps to zeros") {
        EcgRecord rec;
        rec.record_id = "flat";
        rec.fs = 500;
        rec.n_samples = 6;
        rec.leads = {Lead::D1};
        rec.samples.assign(6, 2.5f);
        EcgRecord out = standardize_ecg(rec);
        for (float v : out.samples) REQUIRE(v == 0.0f);
    }
}

TEST_CASE("split arithmetic matches the worked example", "[pipeline]") {
    // counts (AF1=10, AF0=100), test_frac 0.2, ratio 5
    Manifest m = fake_manifest(100, 10);
    Splits s = build_splits(m, 0.2, 5, 7);
    REQUIRE(s.test_balanced.size() == 4);    // 2 + 2
    REQUIRE(s.test_unbalanced.size() == 12); // 2 + 10
    REQUIRE(s.train.size() == 32);           // (8 + 8) * 2
    REQUIRE(s.test_balanced.count(ClassLabel::AF1) == 2);
    REQUIRE(s.test_unbalanced.count(ClassLabel::AF0) == 10);
    REQUIRE(s.train.count(ClassLabel::AF0) == 16);
    REQUIRE(s.train.count(ClassLabel::AF1) == 16);
}

TEST_CASE("splits share test positives and nest negative pools", "[pipeline]") {
    Manifest m = fake_manifest(200, 40);
    Splits s = build_splits(m, 0.15, 4, 3);

    std::set<std::string> bal_pos, unbal_pos, bal_neg, unbal_neg;
    for (const auto& r : s.test_balanced.rows)
        (r.label == ClassLabel::AF1 ? bal_pos : bal_neg).insert(r.record_id);
    for (const auto& r : s.test_unbalanced.rows)
        (r.label == ClassLabel::AF1 ? unbal_pos : unbal_neg).insert(r.record_id);

    REQUIRE(bal_pos == unbal_pos);  // identical AF1 members
    for (const auto& id : bal_neg) REQUIRE(unbal_neg.count(id) == 1);  // subset

    // no leakage into training, augmentation suffixes stripped
    std::set<std::string> train_ids;
    for (const auto& id : ids_of(s.train, true)) train_ids.insert(id);
    for (const auto& id : ids_of(s.test_balanced)) REQUIRE(train_ids.count(id) == 0);
    for (const auto& id : ids_of(s.test_unbalanced)) REQUIRE(train_ids.count(id) == 0);
}

TEST_CASE("train set pairs every original with one shifted copy", "[pipeline]") {
    Manifest m = fake_manifest(60, 30);
    Splits s = build_splits(m, 0.2, 2, 9);
    int originals = 0, shifted = 0;
    std::set<std::string> bases;
    for (const auto& r : s.train.rows) {
        if (parse_shift_suffix(r.record_id)) {
            ++shifted;
            bases.insert(strip_shift_suffix(r.record_id));
        } else {
            ++originals;
        }
    }
    REQUIRE(originals == shifted);
    REQUIRE(int(bases.size()) == originals);
    // augmentation doubling: train size is 4x the AF1 original count
    int af1_orig = 0;
    for (const auto& r : s.train.rows)
        if (r.label == ClassLabel::AF1 && !parse_shift_suffix(r.record_id)) ++af1_orig;
    REQUIRE(int(s.train.size()) == 4 * af1_orig);
}

TEST_CASE("class balance holds for every seed", "[pipeline]") {
    Manifest m = fake_manifest(150, 50);
    for (uint64_t seed : {1, 2, 3, 4, 5}) {
        Splits s = build_splits(m, 0.12, 3, seed);
        REQUIRE(s.train.count(ClassLabel::AF0) == s.train.count(ClassLabel::AF1));
        REQUIRE(s.test_balanced.count(ClassLabel::AF0) == s.test_balanced.count(ClassLabel::AF1));
    }
}

TEST_CASE("same seed reproduces splits element for element", "[pipeline]") {
    Manifest m = fake_manifest(80, 40);
    Splits a = build_splits(m, 0.2, 2, 123);
    Splits b = build_splits(m, 0.2, 2, 123);
    REQUIRE(ids_of(a.train) == ids_of(b.train));
    REQUIRE(ids_of(a.test_balanced) == ids_of(b.test_balanced));
    REQUIRE(ids_of(a.test_unbalanced) == ids_of(b.test_unbalanced));
    Splits c = build_splits(m, 0.2, 2, 124);
    REQUIRE(ids_of(a.train) != ids_of(c.train));
}

TEST_CASE("split preconditions are enforced", "[pipeline]") {
    SECTION("both classes required") {
        Manifest m = fake_manifest(50, 0);
        REQUIRE_THROWS_WITH(build_splits(m, 0.2, 5, 1), ContainsSubstring("both classes"));
    }
    SECTION("insufficient negatives for the ratio") {
        Manifest m = fake_manifest(30, 20);
        REQUIRE_THROWS_WITH(build_splits(m, 0.25, 5, 1), ContainsSubstring("insufficient AF0"));
    }
}

TEST_CASE("splits persist and reload through manifests", "[pipeline]") {
    testutil::TempDir tmp("splits");
    Manifest m = fake_manifest(40, 20);
    Splits s = build_splits(m, 0.2, 2, 5);
    persist_splits(s, tmp.path.string());
    Manifest train = read_manifest(tmp.file("train.csv"));
    REQUIRE(ids_of(train) == ids_of(s.train));
    NormStats ns = read_norm_stats(tmp.file("norm_stats.csv"));
    for (int i = 0; i < kNumTabularFeatures; ++i)
        REQUIRE_THAT(ns.mean[i], Catch::Matchers::WithinRel(s.norm.mean[i], 1e-6));
    std::string report = read_file_bytes(tmp.file("split_report.txt"));
    REQUIRE_THAT(report, ContainsSubstring("seed=5"));
    REQUIRE_THAT(report, ContainsSubstring("train_total=64"));
}

TEST_CASE("dataset loader applies shift suffixes and standardizes", "[pipeline]") {
    testutil::TempDir tmp("loader");
    auto rec = testutil::random_record(1000, 2, 55, "r0");
    write_ecg(rec, tmp.file("r0.ecg"));

    Manifest m;
    ManifestRow orig;
    orig.record_id = "r0";
    orig.path = tmp.file("r0.ecg");
    orig.label = ClassLabel::AF0;
    orig.tabular = testutil::sample_tabular(70);
    ManifestRow aug = orig;
    aug.record_id = "r0#sb300";
    m.rows = {orig, aug};

    LoadOptions opt;
    opt.standardize = false;
    DataSet ds = load_dataset(m, opt);
    REQUIRE(ds.count == 2);
    REQUIRE(ds.channels == 2);
    REQUIRE(ds.time_len == 1000);
    // row 1 is the shifted copy: first 300 samples of each channel are zero
    const float* shifted_ch0 = ds.ecg.data() + size_t(1) * 2 * 1000;
    for (int t = 0; t < 300; ++t) REQUIRE(shifted_ch0[t] == 0.0f);
    REQUIRE(shifted_ch0[300] == rec.at(0, 0));

    LoadOptions std_opt;
    DataSet std_ds = load_dataset(m, std_opt);
    const float* ch0 = std_ds.ecg.data();
    double mean = 0;
    for (int t = 0; t < 1000; ++t) mean += ch0[t];
    REQUIRE(std::abs(mean / 1000.0) < 1e-5);
}
