#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "afnet/core/io.hpp"
#include "afnet/core/normalize.hpp"
#include "support/helpers.hpp"

using namespace afnet;
using Catch::Matchers::ContainsSubstring;
using testutil::TempDir;

TEST_CASE("lead name/index mapping is a bijection over 12 members", "[core]") {
    REQUIRE(kNumLeads == 12);
    REQUIRE(std::string(lead_name(Lead::D1)) == "D1");
    REQUIRE(std::string(lead_name(Lead::avR)) == "avR");
    for (int i = 0; i < kNumLeads; ++i) {
        Lead l = lead_from_ordinal(i);
        REQUIRE(lead_from_name(lead_name(l)) == l);
        REQUIRE(static_cast<int>(l) == i);
    }
    REQUIRE_THROWS_AS(lead_from_name("II"), data_error);
    REQUIRE_THROWS_AS(lead_from_ordinal(12), data_error);
}

TEST_CASE("ecg waveform write/read round-trips bit-exactly", "[core]") {
    TempDir tmp("ecgio");
    auto rec = testutil::random_record(777, 12, 42, "roundtrip");
    rec.label = ClassLabel::AF1;
    std::string path = tmp.file("a.ecg");
    write_ecg(rec, path);
    EcgRecord back = read_ecg(path);
    REQUIRE(back.n_samples == rec.n_samples);
    REQUIRE(back.fs == rec.fs);
    REQUIRE(back.leads == rec.leads);
    REQUIRE(back.samples == rec.samples);  // bit-identical floats
}

TEST_CASE("ecg header layout matches the declared byte format", "[core]") {
    // hex-dump oracle for a 2500x1 single-lead record
    auto rec = testutil::random_record(2500, 1, 7, "hexdump");
    std::string bytes = encode_ecg(rec);
    REQUIRE(bytes.substr(0, 4) == "ECG1");
    auto u16 = [&](size_t off) { return uint8_t(bytes[off]) | (uint8_t(bytes[off + 1]) << 8); };
    auto u32 = [&](size_t off) {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(bytes[off + i])) << (8 * i);
        return v;
    };
    REQUIRE(u16(4) == 1);     // format version
    REQUIRE(u16(6) == 1);     // n_leads
    REQUIRE(u32(8) == 2500);  // n_samples
    float fs;
    uint32_t fs_bits = u32(12);
    std::memcpy(&fs, &fs_bits, 4);
    REQUIRE(fs == 500.0f);
    REQUIRE(uint8_t(bytes[16]) == 0);  // lead ordinal D1
    REQUIRE(bytes.size() == 17 + size_t(2500) * 4);
}

TEST_CASE("ecg reader reports matrix shape from the header", "[core]") {
    TempDir tmp("shape");
    auto rec = testutil::random_record(5000, 12, 3, "full");
    write_ecg(rec, tmp.file("full.ecg"));
    EcgRecord back = read_ecg(tmp.file("full.ecg"));
    REQUIRE(back.n_samples == 5000);
    REQUIRE(back.n_leads() == 12);
    REQUIRE(back.samples.size() == size_t(5000) * 12);
}

TEST_CASE("ecg reader rejects corrupt files", "[core]") {
    TempDir tmp("corrupt");
    auto rec = testutil::random_record(100, 2, 5, "c");
    std::string bytes = encode_ecg(rec);

    SECTION("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        std::ofstream(tmp.file("bad.ecg"), std::ios::binary) << bad;
        REQUIRE_THROWS_WITH(read_ecg(tmp.file("bad.ecg")), ContainsSubstring("magic"));
    }
    SECTION("payload short by 4 bytes names expected vs actual") {
        std::string bad = bytes.substr(0, bytes.size() - 4);
        std::ofstream(tmp.file("short.ecg"), std::ios::binary) << bad;
        REQUIRE_THROWS_WITH(read_ecg(tmp.file("short.ecg")),
                            ContainsSubstring("expected 800 bytes") &&
                                ContainsSubstring("got 796"));
    }
    SECTION("NaN payload rejected") {
        std::string bad = bytes;
        uint32_t nan_bits = 0x7fc00000u;
        std::memcpy(bad.data() + bad.size() - 4, &nan_bits, 4);
        std::ofstream(tmp.file("nan.ecg"), std::ios::binary) << bad;
        REQUIRE_THROWS_WITH(read_ecg(tmp.file("nan.ecg")), ContainsSubstring("non-finite"));
    }
}

TEST_CASE("ecg writer rejects invalid records before writing", "[core]") {
    TempDir tmp("reject");
    auto rec = testutil::random_record(50, 3, 11, "nan");
    rec.samples[17] = std::numeric_limits<float>::quiet_NaN();
    REQUIRE_THROWS_AS(write_ecg(rec, tmp.file("x.ecg")), data_error);
    REQUIRE_FALSE(std::filesystem::exists(tmp.file("x.ecg")));
}

static std::string manifest_text_3rows() {
    std::string s = manifest_header() + "\n";
    ManifestRow r;
    r.tabular = testutil::sample_tabular(70);
    r.path = "/dev/null";
    r.record_id = "a";
    r.label = ClassLabel::AF0;
    s += manifest_row_line(r) + "\n";
    r.record_id = "b";
    r.label = ClassLabel::AF1;
    s += manifest_row_line(r) + "\n";
    r.record_id = "c";
    r.label = ClassLabel::AF0;
    s += manifest_row_line(r) + "\n";
    return s;
}

TEST_CASE("manifest parses rows in order with class counts", "[core]") {
    TempDir tmp("manifest");
    std::ofstream(tmp.file("m.csv")) << manifest_text_3rows();
    Manifest m = read_manifest(tmp.file("m.csv"));
    REQUIRE(m.size() == 3);
    REQUIRE(m.count(ClassLabel::AF0) == 2);
    REQUIRE(m.count(ClassLabel::AF1) == 1);
    REQUIRE(m.rows[0].record_id == "a");
    REQUIRE(m.rows[1].record_id == "b");
    REQUIRE(m.rows[2].record_id == "c");  // ingestion preserves file order
}

TEST_CASE("manifest errors are precise", "[core]") {
    TempDir tmp("manifest_err");

    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_manifest(tmp.file("absent.csv")), data_error);
    }
    SECTION("duplicate record_id names the id and both lines") {
        std::string text = manifest_text_3rows();
        ManifestRow r;
        r.tabular = testutil::sample_tabular(70);
        r.path = "/dev/null";
        r.record_id = "b";
        r.label = ClassLabel::AF0;
        text += manifest_row_line(r) + "\n";
        std::ofstream(tmp.file("dup.csv")) << text;
        REQUIRE_THROWS_WITH(read_manifest(tmp.file("dup.csv")),
                            ContainsSubstring("'b'") && ContainsSubstring("lines 3 and 5"));
    }
    SECTION("non-numeric feature cell") {
        std::string text = manifest_text_3rows();
        auto pos = text.find("169");
        text.replace(pos, 3, "abc");
        std::ofstream(tmp.file("nn.csv")) << text;
        REQUIRE_THROWS_WITH(read_manifest(tmp.file("nn.csv")), ContainsSubstring("non-numeric"));
    }
    SECTION("unknown label token") {
        std::string text = manifest_text_3rows();
        auto pos = text.find(",0,M,");
        text.replace(pos, 5, ",2,M,");
        std::ofstream(tmp.file("lab.csv")) << text;
        REQUIRE_THROWS_WITH(read_manifest(tmp.file("lab.csv")), ContainsSubstring("label"));
    }
    SECTION("wrong header aborts") {
        std::string text = "id,path,label\nx,y,0\n";
        std::ofstream(tmp.file("hdr.csv")) << text;
        REQUIRE_THROWS_WITH(read_manifest(tmp.file("hdr.csv")), ContainsSubstring("header"));
    }
}

TEST_CASE("manifest write/read round-trip", "[core]") {
    TempDir tmp("manifest_rt");
    Manifest m;
    for (int i = 0; i < 5; ++i) {
        ManifestRow r;
        r.record_id = strf("rec%d", i);
        r.path = strf("/data/rec%d.ecg", i);
        r.label = i % 2 ? ClassLabel::AF1 : ClassLabel::AF0;
        r.tabular = testutil::sample_tabular(60.0 + i, 150.0 + 2 * i);
        m.rows.push_back(r);
    }
    write_manifest(m, tmp.file("m.csv"));
    Manifest back = read_manifest(tmp.file("m.csv"));
    REQUIRE(back.size() == m.size());
    for (size_t i = 0; i < m.rows.size(); ++i) {
        REQUIRE(back.rows[i].record_id == m.rows[i].record_id);
        REQUIRE(back.rows[i].label == m.rows[i].label);
        REQUIRE(back.rows[i].tabular.features() == m.rows[i].tabular.features());
    }
}

TEST_CASE("tabular normalization fits a population z-score", "[core]") {
    std::vector<TabularRecord> rows;
    for (double age : {60.0, 65.0, 70.0, 75.0, 80.0})
        rows.push_back(testutil::sample_tabular(age, 150.0 + age));
    rows[1].gender = Gender::F;
    rows[3].gender = Gender::F;

    auto out = normalize_tabular(rows);
    // every output column has mean 0 and std 1 (population denominator)
    for (int f = 0; f < kNumTabularFeatures; ++f) {
        double mean = 0, var = 0;
        for (const auto& r : out.rows) mean += r[f];
        mean /= out.rows.size();
        for (const auto& r : out.rows) var += (r[f] - mean) * (r[f] - mean);
        var /= out.rows.size();
        REQUIRE(std::abs(mean) < 1e-6);
        REQUIRE(std::abs(std::sqrt(var) - 1.0) < 1e-6);
    }

    SECTION("two ages 70 and 80 map to -1 and +1 with the population denominator") {
        std::vector<TabularRecord> two = {testutil::sample_tabular(70, 160),
                                          testutil::sample_tabular(80, 180)};
        two[0].gender = Gender::F;  // avoid constant gender column
        NormStats s = fit_norm_stats(two);
        REQUIRE(s.mean[1] == 75.0);
        REQUIRE(s.stddev[1] == 5.0);
        auto n = normalize_tabular(two, &s);
        REQUIRE(n.rows[0][1] == Catch::Approx(-1.0));
        REQUIRE(n.rows[1][1] == Catch::Approx(1.0));
    }

    SECTION("row equal to the training mean maps to the zero vector") {
        auto z = apply_norm_stats(out.stats.mean, out.stats);
        for (double v : z) REQUIRE(v == 0.0);
    }

    SECTION("test-time rows reuse the supplied stats unchanged") {
        auto held = testutil::sample_tabular(99, 500);
        auto applied = normalize_tabular({held, held}, &out.stats);
        REQUIRE(applied.stats.mean == out.stats.mean);
        REQUIRE(applied.rows[0][1] == Catch::Approx((99.0 - out.stats.mean[1]) / out.stats.stddev[1]));
    }

    SECTION("zero-variance feature is rejected when fitting") {
        std::vector<TabularRecord> same = {testutil::sample_tabular(70), testutil::sample_tabular(70)};
        REQUIRE_THROWS_WITH(fit_norm_stats(same), ContainsSubstring("zero-variance"));
    }
}

TEST_CASE("normalization affine composition law", "[core]") {
    // applying identity stats after stats S equals applying S alone
    std::vector<TabularRecord> rows;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int i = 0; i < 8; ++i) {
        auto t = testutil::sample_tabular(60 + 3.0 * i, 140 + 5.0 * i);
        t.qt_int *= u(rng);
        t.v_rate *= u(rng);
        t.gender = i % 3 ? Gender::M : Gender::F;
        rows.push_back(t);
    }
    auto fitted = normalize_tabular(rows);
    NormStats ident = NormStats::identity();
    for (size_t i = 0; i < rows.size(); ++i) {
        auto once = fitted.rows[i];
        auto twice = apply_norm_stats(TabularRecord::from_features(once), ident);
        // gender decodes through a >0.5 threshold, so compare numerically
        for (int f = 1; f < kNumTabularFeatures; ++f) REQUIRE(twice[f] == Catch::Approx(once[f]));
    }
}

TEST_CASE("norm stats file round-trip", "[core]") {
    TempDir tmp("norm");
    std::vector<TabularRecord> rows = {testutil::sample_tabular(60, 150),
                                       testutil::sample_tabular(80, 190)};
    rows[0].gender = Gender::F;
    NormStats s = fit_norm_stats(rows);
    write_norm_stats(s, tmp.file("n.csv"));
    NormStats back = read_norm_stats(tmp.file("n.csv"));
    for (int i = 0; i < kNumTabularFeatures; ++i) {
        REQUIRE(back.mean[i] == s.mean[i]);
        REQUIRE(back.stddev[i] == s.stddev[i]);
    }
}
