#pragma once

// The training loop: stratified validation carve-out, seeded shuffling,
// minibatch Adam with the halving learning-rate schedule, early stopping on
// validation accuracy, best-epoch parameter restore.

#include <limits>

#include "afnet/models/models.hpp"
#include "afnet/nn/optim.hpp"
#include "afnet/pipeline/dataset.hpp"

namespace afnet {

struct TrainConfig {
    double lr0 = 0.01;
    int half_period = 15;
    int patience = 15;
    double min_delta = 0.005;
    int max_epochs = 100;
    int batch_size = 32;
    double val_fraction = 0.10;
    uint64_t seed = 0;

    void validate() const {
        if (!(val_fraction > 0 && val_fraction < 0.5))
            throw data_error("val_fraction must lie in (0, 0.5)");
        if (batch_size < 2) throw data_error("batch_size must be >= 2 (batch norm needs pairs)");
        if (max_epochs < 0) throw data_error("max_epochs must be >= 0");
        if (patience < 1) throw data_error("patience must be >= 1");
        if (!(lr0 > 0)) throw data_error("lr0 must be positive");
        if (half_period < 1) throw data_error("half_period must be >= 1");
    }
};

enum class StopReason { EarlyStop, MaxEpochs };

struct EpochRow {
    double train_loss = 0, train_acc = 0, val_acc = 0, lr = 0;
};

struct TrainHistory {
    std::vector<EpochRow> rows;
    int best_epoch = -1;
    StopReason reason = StopReason::MaxEpochs;
};

// An epoch improves iff its accuracy exceeds the best recorded value by MORE
// than min_delta; stop after `patience` consecutive non-improving epochs.
class EarlyStopper {
public:
    EarlyStopper(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

    bool observe(int epoch, double value) {
        if (value > best_ + min_delta_) {
            best_ = value;
            best_epoch_ = epoch;
            wait_ = 0;
            return false;
        }
        return ++wait_ >= patience_;
    }

    int best_epoch() const { return best_epoch_; }
    double best_value() const { return best_; }

private:
    int patience_;
    double min_delta_;
    double best_ = -std::numeric_limits<double>::infinity();
    int best_epoch_ = -1;
    int wait_ = 0;
};

struct EarlyStopResult {
    bool stop = false;
    int best_epoch = -1;
};

inline EarlyStopResult early_stop_check(const std::vector<double>& val_accuracies,
                                        int patience = 15, double min_delta = 0.005) {
    if (val_accuracies.empty()) throw data_error("early_stop_check: empty accuracy list");
    EarlyStopper s(patience, min_delta);
    EarlyStopResult r;
    for (int e = 0; e < int(val_accuracies.size()); ++e) {
        if (s.observe(e, val_accuracies[e])) {
            r.stop = true;
            break;
        }
    }
    r.best_epoch = s.best_epoch();
    return r;
}

namespace detail_train {

template <typename Net>
int correct_count(Net& net, const DataSet& ds, const std::vector<int>& idx, size_t lo, size_t hi,
                  int batch_size, nn::Rng& rng) {
    int correct = 0;
    nn::Tensor<float> x, tab;
    std::vector<int> labels;
    for (size_t start = lo; start < hi; start += size_t(batch_size)) {
        size_t end = std::min(hi, start + size_t(batch_size));
        gather_batch(ds, idx, start, end, ds.ecg.empty() ? nullptr : &x,
                     ds.has_tab ? &tab : nullptr, labels);
        models::Batch<float> batch;
        if (!ds.ecg.empty()) batch.ecg = &x;
        if (ds.has_tab) batch.tab = &tab;
        const auto& logits = net.forward(batch, nn::Mode::Inference, rng);
        for (int r = 0; r < int(end - start); ++r) {
            int pred = logits.data[2 * r + 1] >= logits.data[2 * r + 0] ? 1 : 0;
            correct += pred == labels[r] ? 1 : 0;
        }
    }
    return correct;
}

}  // namespace detail_train

template <typename Net>
TrainHistory train(Net& net, const DataSet& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.count == 0) throw data_error("train: empty training set");
    const int n0 = data.count_label(0), n1 = data.count_label(1);
    if (n0 != n1) throw data_error(strf("train: set must be class-balanced (AF0=%d, AF1=%d)", n0, n1));

    nn::Rng rng(cfg.seed);

    // Stratified validation carve-out; it never receives gradient updates.
    std::vector<int> by_class[2];
    for (int i = 0; i < data.count; ++i) by_class[data.labels[i]].push_back(i);
    std::vector<int> train_idx, val_idx;
    for (auto& cls : by_class) {
        std::shuffle(cls.begin(), cls.end(), rng.gen);
        size_t n_val = size_t(std::floor(cfg.val_fraction * double(cls.size())));
        if (n_val == 0) throw data_error("train: validation split is empty for one class");
        val_idx.insert(val_idx.end(), cls.begin(), cls.begin() + n_val);
        train_idx.insert(train_idx.end(), cls.begin() + n_val, cls.end());
    }

    auto& params = net.params();
    nn::Adam<float> opt(params);
    EarlyStopper stopper(cfg.patience, cfg.min_delta);
    TrainHistory hist;
    std::vector<nn::Tensor<float>> best_values;

    nn::Tensor<float> x, tab, dlogits;
    std::vector<int> labels;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = nn::lr_at_epoch(epoch, cfg.lr0, cfg.half_period);
        std::shuffle(train_idx.begin(), train_idx.end(), rng.gen);

        double loss_sum = 0;
        long seen = 0, correct = 0;
        for (size_t start = 0; start < train_idx.size(); start += size_t(cfg.batch_size)) {
            size_t end = std::min(train_idx.size(), start + size_t(cfg.batch_size));
            if (end - start < 2) continue;  // batch norm needs at least a pair
            gather_batch(data, train_idx, start, end, data.ecg.empty() ? nullptr : &x,
                         data.has_tab ? &tab : nullptr, labels);
            models::Batch<float> batch;
            if (!data.ecg.empty()) batch.ecg = &x;
            if (data.has_tab) batch.tab = &tab;

            params.zero_grad();
            const auto& logits = net.forward(batch, nn::Mode::Training, rng);
            double loss = nn::SoftmaxCE<float>::forward_backward(logits, labels, dlogits);
            if (std::isnan(loss))
                throw numeric_error(strf("NaN loss at epoch %d, batch %zu", epoch,
                                         start / size_t(cfg.batch_size)));
            net.backward(dlogits);
            opt.step(params, lr);

            const int b = int(end - start);
            loss_sum += loss * b;
            seen += b;
            for (int r = 0; r < b; ++r) {
                int pred = logits.data[2 * r + 1] >= logits.data[2 * r + 0] ? 1 : 0;
                correct += pred == labels[r] ? 1 : 0;
            }
        }

        int val_correct =
            detail_train::correct_count(net, data, val_idx, 0, val_idx.size(), cfg.batch_size, rng);
        EpochRow row;
        row.lr = lr;
        row.train_loss = seen ? loss_sum / double(seen) : 0.0;
        row.train_acc = seen ? double(correct) / double(seen) : 0.0;
        row.val_acc = double(val_correct) / double(val_idx.size());
        hist.rows.push_back(row);

        bool stop = stopper.observe(epoch, row.val_acc);
        if (stopper.best_epoch() == epoch) {
            best_values.clear();
            for (auto* p : params.items) best_values.push_back(p->value);
        }
        if (stop) {
            hist.reason = StopReason::EarlyStop;
            break;
        }
    }

    hist.best_epoch = stopper.best_epoch();
    if (hist.best_epoch >= 0) {
        size_t i = 0;
        for (auto* p : params.items) p->value = best_values[i++];
    }
    return hist;
}

// Inference scores (probability of class AF1) in dataset order.
template <typename Net>
std::vector<double> predict_scores(Net& net, const DataSet& ds, int batch_size = 32) {
    nn::Rng rng(0);
    std::vector<double> scores;
    scores.reserve(ds.count);
    std::vector<int> idx(ds.count);
    for (int i = 0; i < ds.count; ++i) idx[i] = i;
    nn::Tensor<float> x, tab;
    std::vector<int> labels;
    for (size_t start = 0; start < idx.size(); start += size_t(batch_size)) {
        size_t end = std::min(idx.size(), start + size_t(batch_size));
        gather_batch(ds, idx, start, end, ds.ecg.empty() ? nullptr : &x,
                     ds.has_tab ? &tab : nullptr, labels);
        models::Batch<float> batch;
        if (!ds.ecg.empty()) batch.ecg = &x;
        if (ds.has_tab) batch.tab = &tab;
        const auto& logits = net.forward(batch, nn::Mode::Inference, rng);
        for (int r = 0; r < int(end - start); ++r) {
            auto [loss, p] = nn::SoftmaxCE<float>::eval(logits.ptr() + 2 * r, 0);
            scores.push_back(p[1]);
        }
    }
    return scores;
}

inline const char* stop_reason_name(StopReason r) {
    return r == StopReason::EarlyStop ? "early_stop" : "max_epochs";
}

inline std::string history_csv(const TrainHistory& h) {
    std::string s = "epoch,train_loss,train_acc,val_acc,lr\n";
    for (int e = 0; e < int(h.rows.size()); ++e) {
        const auto& r = h.rows[e];
        s += strf("%d,%.8g,%.8g,%.8g,%.8g\n", e, r.train_loss, r.train_acc, r.val_acc, r.lr);
    }
    return s;
}

inline std::string run_report_text(const TrainConfig& cfg, const models::ModelSpec& spec,
                                   const std::vector<std::pair<std::string, std::string>>& extra,
                                   const TrainHistory& hist) {
    std::string s;
    s += strf("model=%s\n", models::model_kind_name(spec.kind));
    s += strf("fingerprint=%016llx\n", (unsigned long long)spec.fingerprint());
    s += strf("seed=%llu\n", (unsigned long long)cfg.seed);
    s += strf("lr0=%g\n", cfg.lr0);
    s += strf("half_period=%d\n", cfg.half_period);
    s += strf("patience=%d\n", cfg.patience);
    s += strf("min_delta=%g\n", cfg.min_delta);
    s += strf("max_epochs=%d\n", cfg.max_epochs);
    s += strf("batch_size=%d\n", cfg.batch_size);
    s += strf("val_fraction=%g\n", cfg.val_fraction);
    for (const auto& [k, v] : extra) s += k + "=" + v + "\n";
    s += strf("best_epoch=%d\n", hist.best_epoch);
    s += strf("stop_reason=%s\n", stop_reason_name(hist.reason));
    s += history_csv(hist);
    return s;
}

}  // namespace afnet
