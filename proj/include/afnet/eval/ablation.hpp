#pragma once

// Single-lead and band ablation harnesses. One split is built from the
// harness seed; each listed seed then trains an independent EcgNet and is
// scored by AUC on the balanced test set. A failing condition is recorded in
// its row and does not abort the harness.

#include <future>

#include "afnet/eval/metrics.hpp"
#include "afnet/train/train.hpp"

namespace afnet {

struct AblationConfig {
    TrainConfig train;
    double test_frac = 0.12;
    int unbal_ratio = 5;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    int jobs = 1;
};

struct AblationRow {
    std::string condition;
    double mean_auc = 0;
    double std_auc = 0;
    std::vector<double> seed_aucs;
    std::string error;  // empty on success
};

struct AblationTable {
    std::vector<AblationRow> rows;
};

inline ScoredSet scored_from(const std::vector<double>& scores, const DataSet& ds) {
    ScoredSet out;
    out.reserve(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) out.push_back({scores[i], ds.labels[i]});
    return out;
}

namespace detail_abl {

inline AblationRow run_condition(const std::string& condition, const Splits& splits,
                                 const AblationConfig& cfg, const LoadOptions& opts) {
    AblationRow row;
    row.condition = condition;
    try {
        if (cfg.seeds.size() < 2)
            throw data_error("ablation needs >= 2 seeds (std undefined otherwise)");
        DataSet train_set = load_dataset(splits.train, opts);
        DataSet test_set = load_dataset(splits.test_balanced, opts);
        for (uint64_t seed : cfg.seeds) {
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            models::EcgNet<float> net(models::build_ecgnet(train_set.channels), seed);
            train(net, train_set, tc);
            row.seed_aucs.push_back(auc(scored_from(predict_scores(net, test_set), test_set)));
        }
        MeanStd ms = aggregate_runs(row.seed_aucs);
        row.mean_auc = ms.mean;
        row.std_auc = ms.stddev;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

template <typename Fn>
AblationTable run_table(int n_conditions, int jobs, Fn&& make_row) {
    AblationTable table;
    table.rows.resize(n_conditions);
    if (jobs <= 1) {
        for (int i = 0; i < n_conditions; ++i) table.rows[i] = make_row(i);
        return table;
    }
    std::vector<std::future<AblationRow>> futures;
    futures.reserve(n_conditions);
    for (int i = 0; i < n_conditions; ++i)
        futures.push_back(std::async(std::launch::deferred | std::launch::async,
                                     [&make_row, i] { return make_row(i); }));
    for (int i = 0; i < n_conditions; ++i) table.rows[i] = futures[i].get();
    return table;
}

}  // namespace detail_abl

inline AblationTable run_lead_ablation(const Manifest& manifest, const AblationConfig& cfg) {
    Splits splits = build_splits(manifest, cfg.test_frac, cfg.unbal_ratio, cfg.train.seed);
    return detail_abl::run_table(kNumLeads, cfg.jobs, [&](int i) {
        Lead lead = static_cast<Lead>(i);
        LoadOptions opts;
        opts.leads = std::vector<Lead>{lead};
        return detail_abl::run_condition(lead_name(lead), splits, cfg, opts);
    });
}

inline AblationTable run_band_ablation(const Manifest& manifest, const AblationConfig& cfg) {
    Splits splits = build_splits(manifest, cfg.test_frac, cfg.unbal_ratio, cfg.train.seed);
    const auto& bands = dsp::band_catalog();
    return detail_abl::run_table(int(bands.size()) + 1, cfg.jobs, [&](int i) {
        LoadOptions opts;  // i == 0: unfiltered, bypasses the filter entirely
        std::string name = "unfiltered";
        if (i > 0) {
            opts.band = bands[i - 1];
            name = bands[i - 1].name();
        }
        return detail_abl::run_condition(name, splits, cfg, opts);
    });
}

inline std::string ablation_csv(const AblationTable& table) {
    std::string s = "condition,mean_auc,std_auc";
    size_t max_seeds = 0;
    for (const auto& r : table.rows) max_seeds = std::max(max_seeds, r.seed_aucs.size());
    for (size_t i = 0; i < max_seeds; ++i) s += strf(",auc_seed%zu", i);
    s += ",error\n";
    for (const auto& r : table.rows) {
        s += r.condition + strf(",%.8g,%.8g", r.mean_auc, r.std_auc);
        for (double a : r.seed_aucs) s += strf(",%.8g", a);
        for (size_t i = r.seed_aucs.size(); i < max_seeds; ++i) s += ",";
        s += "," + r.error + "\n";
    }
    return s;
}

inline AblationTable ablation_from_csv(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.empty()) throw data_error("empty ablation table");
    AblationTable table;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto cells = split(lines[i], ',');
        if (cells.size() < 3) throw data_error("malformed ablation row: " + lines[i]);
        AblationRow row;
        row.condition = cells[0];
        row.mean_auc = std::stod(cells[1]);
        row.std_auc = std::stod(cells[2]);
        for (size_t c = 3; c + 1 < cells.size(); ++c)
            if (!cells[c].empty()) row.seed_aucs.push_back(std::stod(cells[c]));
        row.error = cells.back();
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Plain-text render in the shape of the paper's ablation tables
// (mean percent AUC with std in brackets).
inline std::string render_ablation_text(const AblationTable& table, const std::string& title) {
    std::string s = title + "\n";
    s += strf("%-12s %-14s %s\n", "condition", "mean AUC (%)", "std");
    for (const auto& r : table.rows) {
        if (!r.error.empty())
            s += strf("%-12s failed: %s\n", r.condition.c_str(), r.error.c_str());
        else
            s += strf("%-12s %-14.1f (%.2f)\n", r.condition.c_str(), 100.0 * r.mean_auc,
                      100.0 * r.std_auc);
    }
    return s;
}

}  // namespace afnet
