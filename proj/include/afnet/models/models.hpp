#pragma once

// EcgNet / TabNet / FullModel.
//
// EcgNet: 13 dilated conv layers (kernel 8, 64 filters, same padding), each
// followed by batch norm, ReLU and 5% dropout; max pooling after layers 4, 8
// and 12 only, so a 5000-sample input reaches global average pooling at
// 64 x 625 and the temporal axis stays available for class activation maps.
// TabNet: dense 17-256-128-64, each layer with batch norm, ReLU, 50% dropout.
// FullModel: elementwise sum of the two 64-d trunk outputs into a shared
// 2-way softmax head; trained jointly end to end.

#include <string>
#include <vector>

#include "afnet/nn/layers.hpp"

namespace afnet::models {

using nn::Mode;
using nn::ParameterStore;
using nn::Rng;
using nn::Tensor;

struct EcgNetConfig {
    int n_leads = 12;
    int time_len = 5000;
    int filters = 64;
    int kernel = 8;
    std::vector<int> dilations = {1, 2, 4, 8, 1, 2, 4, 8, 1, 2, 4, 8, 1};
    std::vector<int> pool_after = {4, 8, 12};  // 1-based conv layer indices
    double dropout = 0.05;

    int pre_gap_len() const {
        int t = time_len;
        for (size_t i = 0; i < pool_after.size(); ++i) t /= 2;
        return t;
    }
};

struct TabNetConfig {
    int n_features = 17;
    std::vector<int> widths = {256, 128, 64};
    double dropout = 0.5;
};

enum class ModelKind { Ecg, Tab, Full };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Ecg: return "ecg";
        case ModelKind::Tab: return "tab";
        case ModelKind::Full: return "full";
    }
    return "?";
}

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "ecg") return ModelKind::Ecg;
    if (s == "tab") return ModelKind::Tab;
    if (s == "full") return ModelKind::Full;
    throw usage_error("unknown model kind: " + s + " (expected ecg, tab or full)");
}

struct ModelSpec {
    ModelKind kind = ModelKind::Ecg;
    EcgNetConfig ecg;
    TabNetConfig tab;

    void validate() const {
        if (kind != ModelKind::Tab) {
            if (ecg.dilations.size() != 13)
                throw data_error("EcgNet must have exactly 13 convolution layers");
            if (ecg.pool_after.size() != 3)
                throw data_error("EcgNet must have exactly 3 max-pool layers");
            if (ecg.n_leads < 1 || ecg.n_leads > 12)
                throw data_error(strf("EcgNet lead count must be 1..12, got %d", ecg.n_leads));
            if (ecg.time_len < 2) throw data_error("EcgNet input length too short");
        }
        if (kind != ModelKind::Ecg) {
            if (tab.n_features < 1) throw data_error("TabNet needs at least one feature");
            if (tab.widths.empty()) throw data_error("TabNet trunk has no layers");
        }
        if (kind == ModelKind::Full && ecg.filters != tab.widths.back())
            throw data_error(strf("fusion requires matching trunk widths (%d vs %d)", ecg.filters,
                                  tab.widths.back()));
    }

    std::string fingerprint_text() const {
        std::string s = std::string("kind=") + model_kind_name(kind);
        if (kind != ModelKind::Tab) {
            s += strf(";ecg(leads=%d,time=%d,filters=%d,kernel=%d,drop=%g,dil=", ecg.n_leads,
                      ecg.time_len, ecg.filters, ecg.kernel, ecg.dropout);
            for (int d : ecg.dilations) s += strf("%d,", d);
            s += "pool=";
            for (int p : ecg.pool_after) s += strf("%d,", p);
            s += ")";
        }
        if (kind != ModelKind::Ecg) {
            s += strf(";tab(features=%d,drop=%g,widths=", tab.n_features, tab.dropout);
            for (int w : tab.widths) s += strf("%d,", w);
            s += ")";
        }
        return s;
    }

    uint64_t fingerprint() const { return fnv1a64(fingerprint_text()); }
};

inline ModelSpec build_ecgnet(int n_leads) {
    ModelSpec spec;
    spec.kind = ModelKind::Ecg;
    spec.ecg.n_leads = n_leads;
    spec.validate();
    return spec;
}

inline ModelSpec build_tabnet(int n_features = 17) {
    ModelSpec spec;
    spec.kind = ModelKind::Tab;
    spec.tab.n_features = n_features;
    spec.validate();
    return spec;
}

inline ModelSpec build_fullmodel(const ModelSpec& ecg_spec, const ModelSpec& tab_spec) {
    ModelSpec spec;
    spec.kind = ModelKind::Full;
    spec.ecg = ecg_spec.ecg;
    spec.tab = tab_spec.tab;
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------

template <typename S>
class EcgTrunk {
public:
    EcgTrunk(const EcgNetConfig& cfg, Rng& rng) : cfg_(cfg) {
        int in_ch = cfg.n_leads;
        for (int i = 0; i < int(cfg.dilations.size()); ++i) {
            blocks_.emplace_back(strf("ecg.conv%d", i + 1), in_ch, cfg.filters, cfg.kernel,
                                 cfg.dilations[i], cfg.dropout, rng);
            in_ch = cfg.filters;
        }
        pools_.resize(cfg.pool_after.size());
        pool_out_.resize(cfg.pool_after.size());
    }

    const Tensor<S>& forward(const Tensor<S>& x, Mode mode, Rng& rng) {
        if (x.shape[1] != cfg_.n_leads) throw data_error("ecg trunk: lead count mismatch");
        const Tensor<S>* cur = &x;
        int pool_idx = 0;
        for (int i = 0; i < int(blocks_.size()); ++i) {
            auto& blk = blocks_[i];
            blk.input = cur;
            blk.conv.forward(*cur, blk.conv_out);
            blk.bn.forward(blk.conv_out, blk.block_out, mode, blk.cache);
            nn::relu_inplace(blk.block_out);
            blk.drop.forward_inplace(blk.block_out, mode, rng);
            cur = &blk.block_out;
            if (pool_idx < int(cfg_.pool_after.size()) && cfg_.pool_after[pool_idx] == i + 1) {
                pool_in_len_[pool_idx] = cur->shape[2];
                pools_[pool_idx].forward(*cur, pool_out_[pool_idx]);
                cur = &pool_out_[pool_idx];
                ++pool_idx;
            }
        }
        pre_gap_ = cur;
        gap_.forward(*cur, feature_);
        forward_mode_ = mode;
        forward_done_ = true;
        return feature_;
    }

    void backward(const Tensor<S>& dfeature) {
        if (!forward_done_ || forward_mode_ != Mode::Training)
            throw numeric_error("ecg trunk: backward without a recorded training forward");
        gap_.backward(dfeature, pre_gap_->shape[2], scratch_a_);
        Tensor<S>* d = &scratch_a_;
        Tensor<S>* spare = &scratch_b_;
        int pool_idx = int(cfg_.pool_after.size()) - 1;
        for (int i = int(blocks_.size()) - 1; i >= 0; --i) {
            if (pool_idx >= 0 && cfg_.pool_after[pool_idx] == i + 1) {
                pools_[pool_idx].backward(*d, pool_in_len_[pool_idx], *spare);
                std::swap(d, spare);
                --pool_idx;
            }
            auto& blk = blocks_[i];
            blk.drop.backward_inplace(*d);
            for (size_t j = 0; j < d->numel(); ++j)
                if (!(blk.block_out.data[j] > S(0))) d->data[j] = S(0);
            blk.bn.backward(blk.conv_out, blk.cache, *d, *spare);
            std::swap(d, spare);
            blk.conv.backward(*blk.input, *d, i > 0 ? spare : nullptr);
            std::swap(d, spare);
        }
        forward_done_ = false;
    }

    void collect(ParameterStore<S>& ps) {
        for (auto& blk : blocks_) {
            blk.conv.collect(ps);
            blk.bn.collect(ps);
        }
    }

    const Tensor<S>& pre_gap_map() const {
        if (!pre_gap_) throw numeric_error("no pre-GAP feature map recorded; run a forward pass");
        return *pre_gap_;
    }
    const Tensor<S>& feature() const { return feature_; }
    const EcgNetConfig& config() const { return cfg_; }

private:
    struct Block {
        Block(std::string name, int in_ch, int out_ch, int kernel, int dilation, double drop_rate,
              Rng& rng)
            : conv(name, in_ch, out_ch, kernel, dilation, rng),
              bn(name + ".bn", out_ch),
              drop(drop_rate) {}

        nn::Conv1d<S> conv;
        nn::BatchNorm1d<S> bn;
        nn::Dropout<S> drop;
        typename nn::BatchNorm1d<S>::Cache cache;
        Tensor<S> conv_out, block_out;
        const Tensor<S>* input = nullptr;
    };

    EcgNetConfig cfg_;
    std::vector<Block> blocks_;
    std::vector<nn::MaxPool1d<S>> pools_;
    std::vector<Tensor<S>> pool_out_;
    int pool_in_len_[8] = {0};
    nn::GlobalAvgPool<S> gap_;
    Tensor<S> feature_, scratch_a_, scratch_b_;
    const Tensor<S>* pre_gap_ = nullptr;
    Mode forward_mode_ = Mode::Inference;
    bool forward_done_ = false;
};

template <typename S>
class TabTrunk {
public:
    TabTrunk(const TabNetConfig& cfg, Rng& rng) : cfg_(cfg) {
        int in_dim = cfg.n_features;
        for (int i = 0; i < int(cfg.widths.size()); ++i) {
            blocks_.emplace_back(strf("tab.dense%d", i + 1), in_dim, cfg.widths[i], cfg.dropout,
                                 rng);
            in_dim = cfg.widths[i];
        }
    }

    const Tensor<S>& forward(const Tensor<S>& x, Mode mode, Rng& rng) {
        if (x.shape[1] != cfg_.n_features) throw data_error("tab trunk: feature count mismatch");
        const Tensor<S>* cur = &x;
        for (auto& blk : blocks_) {
            blk.input = cur;
            blk.dense.forward(*cur, blk.lin_out);
            blk.bn.forward(blk.lin_out, blk.block_out, mode, blk.cache);
            nn::relu_inplace(blk.block_out);
            blk.drop.forward_inplace(blk.block_out, mode, rng);
            cur = &blk.block_out;
        }
        forward_mode_ = mode;
        forward_done_ = true;
        return blocks_.back().block_out;
    }

    void backward(const Tensor<S>& dfeature) {
        if (!forward_done_ || forward_mode_ != Mode::Training)
            throw numeric_error("tab trunk: backward without a recorded training forward");
        scratch_a_ = dfeature;
        Tensor<S>* d = &scratch_a_;
        Tensor<S>* spare = &scratch_b_;
        for (int i = int(blocks_.size()) - 1; i >= 0; --i) {
            auto& blk = blocks_[i];
            blk.drop.backward_inplace(*d);
            for (size_t j = 0; j < d->numel(); ++j)
                if (!(blk.block_out.data[j] > S(0))) d->data[j] = S(0);
            blk.bn.backward(blk.lin_out, blk.cache, *d, *spare);
            std::swap(d, spare);
            blk.dense.backward(*blk.input, *d, i > 0 ? spare : nullptr);
            std::swap(d, spare);
        }
        forward_done_ = false;
    }

    void collect(ParameterStore<S>& ps) {
        for (auto& blk : blocks_) {
            blk.dense.collect(ps);
            blk.bn.collect(ps);
        }
    }

    int out_dim() const { return cfg_.widths.back(); }
    const TabNetConfig& config() const { return cfg_; }

private:
    struct Block {
        Block(std::string name, int in_dim, int out_dim, double drop_rate, Rng& rng)
            : dense(name, in_dim, out_dim, rng), bn(name + ".bn", out_dim), drop(drop_rate) {}

        nn::Dense<S> dense;
        nn::BatchNorm1d<S> bn;
        nn::Dropout<S> drop;
        typename nn::BatchNorm1d<S>::Cache cache;
        Tensor<S> lin_out, block_out;
        const Tensor<S>* input = nullptr;
    };

    TabNetConfig cfg_;
    std::vector<Block> blocks_;
    Tensor<S> scratch_a_, scratch_b_;
    Mode forward_mode_ = Mode::Inference;
    bool forward_done_ = false;
};

// Batch of model inputs; each network reads the part it consumes.
template <typename S>
struct Batch {
    const Tensor<S>* ecg = nullptr;  // [B, leads, T]
    const Tensor<S>* tab = nullptr;  // [B, features]
};

template <typename S>
class EcgNet {
public:
    EcgNet(const ModelSpec& spec, uint64_t seed) : spec_(spec), init_rng_(seed) {
        spec_.validate();
        trunk_ = std::make_unique<EcgTrunk<S>>(spec_.ecg, init_rng_);
        head_ = std::make_unique<nn::Dense<S>>("head", spec_.ecg.filters, 2, init_rng_);
        trunk_->collect(params_);
        head_->collect(params_);
    }

    const Tensor<S>& forward(const Batch<S>& batch, Mode mode, Rng& rng) {
        if (!batch.ecg) throw data_error("EcgNet needs waveform input");
        const Tensor<S>& feat = trunk_->forward(*batch.ecg, mode, rng);
        head_->forward(feat, logits_);
        return logits_;
    }

    void backward(const Tensor<S>& dlogits) {
        head_->backward(trunk_->feature(), dlogits, &dfeat_);
        trunk_->backward(dfeat_);
    }

    ParameterStore<S>& params() { return params_; }
    const ModelSpec& spec() const { return spec_; }
    EcgTrunk<S>& trunk() { return *trunk_; }
    nn::Dense<S>& head() { return *head_; }

private:
    ModelSpec spec_;
    Rng init_rng_;
    std::unique_ptr<EcgTrunk<S>> trunk_;
    std::unique_ptr<nn::Dense<S>> head_;
    ParameterStore<S> params_;
    Tensor<S> logits_, dfeat_;
};

template <typename S>
class TabNet {
public:
    TabNet(const ModelSpec& spec, uint64_t seed) : spec_(spec), init_rng_(seed) {
        spec_.validate();
        trunk_ = std::make_unique<TabTrunk<S>>(spec_.tab, init_rng_);
        head_ = std::make_unique<nn::Dense<S>>("head", trunk_->out_dim(), 2, init_rng_);
        trunk_->collect(params_);
        head_->collect(params_);
    }

    const Tensor<S>& forward(const Batch<S>& batch, Mode mode, Rng& rng) {
        if (!batch.tab) throw data_error("TabNet needs tabular input");
        feat_ = trunk_->forward(*batch.tab, mode, rng);
        head_->forward(feat_, logits_);
        return logits_;
    }

    void backward(const Tensor<S>& dlogits) {
        head_->backward(feat_, dlogits, &dfeat_);
        trunk_->backward(dfeat_);
    }

    ParameterStore<S>& params() { return params_; }
    const ModelSpec& spec() const { return spec_; }
    nn::Dense<S>& head() { return *head_; }

private:
    ModelSpec spec_;
    Rng init_rng_;
    std::unique_ptr<TabTrunk<S>> trunk_;
    std::unique_ptr<nn::Dense<S>> head_;
    ParameterStore<S> params_;
    Tensor<S> feat_, logits_, dfeat_;
};

template <typename S>
class FullModel {
public:
    FullModel(const ModelSpec& spec, uint64_t seed) : spec_(spec), init_rng_(seed) {
        spec_.validate();
        ecg_ = std::make_unique<EcgTrunk<S>>(spec_.ecg, init_rng_);
        tab_ = std::make_unique<TabTrunk<S>>(spec_.tab, init_rng_);
        head_ = std::make_unique<nn::Dense<S>>("head", spec_.ecg.filters, 2, init_rng_);
        ecg_->collect(params_);
        tab_->collect(params_);
        head_->collect(params_);
    }

    const Tensor<S>& forward(const Batch<S>& batch, Mode mode, Rng& rng) {
        if (!batch.ecg || !batch.tab) throw data_error("FullModel needs waveform and tabular input");
        const Tensor<S>& ef = ecg_->forward(*batch.ecg, mode, rng);
        const Tensor<S>& tf = tab_->forward(*batch.tab, mode, rng);
        fused_.reshape(ef.shape);
        for (size_t i = 0; i < fused_.numel(); ++i) fused_.data[i] = ef.data[i] + tf.data[i];
        head_->forward(fused_, logits_);
        return logits_;
    }

    void backward(const Tensor<S>& dlogits) {
        head_->backward(fused_, dlogits, &dfused_);
        ecg_->backward(dfused_);
        tab_->backward(dfused_);
    }

    ParameterStore<S>& params() { return params_; }
    const ModelSpec& spec() const { return spec_; }
    EcgTrunk<S>& ecg_trunk() { return *ecg_; }
    TabTrunk<S>& tab_trunk() { return *tab_; }
    nn::Dense<S>& head() { return *head_; }

private:
    ModelSpec spec_;
    Rng init_rng_;
    std::unique_ptr<EcgTrunk<S>> ecg_;
    std::unique_ptr<TabTrunk<S>> tab_;
    std::unique_ptr<nn::Dense<S>> head_;
    ParameterStore<S> params_;
    Tensor<S> fused_, logits_, dfused_;
};

// ---------------------------------------------------------------------------
// Class activation map: CAM(t) = sum_k w[target, k] * f_k(t) over the pre-GAP
// feature map. Values are unnormalized; each step spans
// time_len / pre_gap_len input samples.
struct CamResult {
    std::vector<float> values;
    int samples_per_step = 0;
};

template <typename S>
CamResult cam(EcgNet<S>& net, const Tensor<S>& ecg_input, int target_class) {
    if (target_class != 0 && target_class != 1) throw usage_error("target class must be 0 or 1");
    Rng rng(0);  // inference: dropout inactive
    models::Batch<S> batch;
    batch.ecg = &ecg_input;
    net.forward(batch, Mode::Inference, rng);
    const Tensor<S>& map = net.trunk().pre_gap_map();
    const int ch = map.shape[1], t_len = map.shape[2];
    const S* w = net.head().weights().value.ptr() + size_t(target_class) * ch;
    CamResult out;
    out.samples_per_step = net.spec().ecg.time_len / t_len;
    out.values.assign(t_len, 0.0f);
    for (int c = 0; c < ch; ++c) {
        const S* row = map.ptr() + size_t(c) * t_len;
        for (int t = 0; t < t_len; ++t) out.values[t] += float(w[c] * row[t]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plain-text architecture table: layer, output shape, parameter count.
inline std::string model_summary(const ModelSpec& spec) {
    std::string s;
    size_t total = 0;
    auto line = [&](const std::string& name, const std::string& shape, size_t n) {
        s += strf("%-18s %-16s %10zu\n", name.c_str(), shape.c_str(), n);
        total += n;
    };
    s += strf("%-18s %-16s %10s\n", "layer", "output", "params");
    if (spec.kind != ModelKind::Tab) {
        const auto& c = spec.ecg;
        int t = c.time_len, in_ch = c.n_leads;
        size_t pool_idx = 0;
        for (int i = 0; i < int(c.dilations.size()); ++i) {
            size_t n = size_t(c.filters) * in_ch * c.kernel + c.filters;
            line(strf("conv%d(d=%d)", i + 1, c.dilations[i]), strf("%dx%d", c.filters, t), n);
            line(strf("bn%d", i + 1), strf("%dx%d", c.filters, t), size_t(2) * c.filters);
            in_ch = c.filters;
            if (pool_idx < c.pool_after.size() && c.pool_after[pool_idx] == i + 1) {
                t /= 2;
                line(strf("maxpool%zu", pool_idx + 1), strf("%dx%d", c.filters, t), 0);
                ++pool_idx;
            }
        }
        line("gap", strf("%d", c.filters), 0);
    }
    if (spec.kind != ModelKind::Ecg) {
        const auto& c = spec.tab;
        int in_dim = c.n_features;
        for (int i = 0; i < int(c.widths.size()); ++i) {
            line(strf("dense%d", i + 1), strf("%d", c.widths[i]),
                 size_t(c.widths[i]) * in_dim + c.widths[i]);
            line(strf("tab_bn%d", i + 1), strf("%d", c.widths[i]), size_t(2) * c.widths[i]);
            in_dim = c.widths[i];
        }
    }
    if (spec.kind == ModelKind::Full) line("fusion(add)", strf("%d", spec.ecg.filters), 0);
    int head_in = spec.kind == ModelKind::Tab ? spec.tab.widths.back() : spec.ecg.filters;
    line("head", "2", size_t(2) * head_in + 2);
    s += strf("%-18s %-16s %10zu\n", "total", "", total);
    return s;
}

}  // namespace afnet::models
