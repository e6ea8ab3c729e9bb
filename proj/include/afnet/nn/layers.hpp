#pragma once

// The layer set of the two trunks: dilated 1D convolution, batch norm,
// ReLU, inverted dropout, width-2 max pooling, global average pooling, dense,
// and softmax cross-entropy. Each layer owns its parameters and exposes an
// explicit forward/backward pair; networks orchestrate activation storage.
//
// Batched layouts: signal tensors are [B, C, T], feature vectors [B, F].
// Reductions accumulate in double and run in a fixed order, so results do not
// depend on the BLAS thread count.

#include <cmath>

#include "afnet/blas.hpp"
#include "afnet/nn/rng.hpp"
#include "afnet/nn/tensor.hpp"

namespace afnet::nn {

enum class Mode { Training, Inference };

template <typename S>
void he_uniform_init(Tensor<S>& t, int fan_in, Rng& rng) {
    double limit = std::sqrt(6.0 / double(fan_in));
    for (auto& v : t.data) v = S(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------
// Conv1d: cross-correlation with dilated taps and "same" zero padding (the
// extra zero goes on the right), stride 1. Runs as one GEMM per kernel tap on
// a clipped time window, which realizes the zero padding without building
// padded/im2col buffers.
template <typename S>
class Conv1d {
public:
    Conv1d(std::string name, int in_ch, int out_ch, int kernel, int dilation, Rng& rng)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          kernel_(kernel),
          dilation_(dilation),
          w_(name + ".W", {out_ch, in_ch, kernel}),
          b_(name + ".b", {out_ch}) {
        if (dilation < 1) throw numeric_error(name + ": dilation must be >= 1");
        he_uniform_init(w_.value, in_ch * kernel, rng);
    }

    int left_pad() const { return ((kernel_ - 1) * dilation_) / 2; }

    void forward(const Tensor<S>& x, Tensor<S>& y) const {
        const int batch = x.shape[0], t_len = x.shape[2];
        if (x.shape[1] != in_ch_) throw numeric_error("conv: input channel mismatch");
        if (t_len < 1) throw numeric_error("conv: empty time axis");
        y.reshape({batch, out_ch_, t_len});
        pack_weights();

        for (int r = 0; r < batch; ++r) {
            S* yr = y.ptr() + size_t(r) * out_ch_ * t_len;
            for (int c = 0; c < out_ch_; ++c) {
                S bias = b_.value.data[c];
                S* row = yr + size_t(c) * t_len;
                for (int t = 0; t < t_len; ++t) row[t] = bias;
            }
            const S* xr = x.ptr() + size_t(r) * in_ch_ * t_len;
            for (int k = 0; k < kernel_; ++k) {
                auto [t0, t1, s0] = tap_range(k, t_len);
                if (t1 <= t0) continue;
                blas::gemm(blas::Transpose::No, blas::Transpose::No, out_ch_, t1 - t0, in_ch_,
                           S(1), w_pack_.ptr() + size_t(k) * out_ch_ * in_ch_, in_ch_, xr + s0,
                           t_len, S(1), yr + t0, t_len);
            }
        }
    }

    // dx may be null for the input layer. Parameter gradients accumulate.
    void backward(const Tensor<S>& x, const Tensor<S>& dy, Tensor<S>* dx) {
        const int batch = x.shape[0], t_len = x.shape[2];
        pack_weights();
        if (dx) {
            dx->reshape({batch, in_ch_, t_len});
            for (int r = 0; r < batch; ++r) {
                const S* dyr = dy.ptr() + size_t(r) * out_ch_ * t_len;
                S* dxr = dx->ptr() + size_t(r) * in_ch_ * t_len;
                for (int k = 0; k < kernel_; ++k) {
                    auto [t0, t1, s0] = tap_range(k, t_len);
                    if (t1 <= t0) continue;
                    blas::gemm(blas::Transpose::Yes, blas::Transpose::No, in_ch_, t1 - t0, out_ch_,
                               S(1), w_pack_.ptr() + size_t(k) * out_ch_ * in_ch_, in_ch_,
                               dyr + t0, t_len, S(1), dxr + s0, t_len);
                }
            }
        }

        dw_pack_.reshape({kernel_, out_ch_, in_ch_});
        for (int r = 0; r < batch; ++r) {
            const S* dyr = dy.ptr() + size_t(r) * out_ch_ * t_len;
            const S* xr = x.ptr() + size_t(r) * in_ch_ * t_len;
            for (int k = 0; k < kernel_; ++k) {
                auto [t0, t1, s0] = tap_range(k, t_len);
                if (t1 <= t0) continue;
                blas::gemm(blas::Transpose::No, blas::Transpose::Yes, out_ch_, in_ch_, t1 - t0,
                           S(1), dyr + t0, t_len, xr + s0, t_len, S(1),
                           dw_pack_.ptr() + size_t(k) * out_ch_ * in_ch_, in_ch_);
            }
            for (int c = 0; c < out_ch_; ++c) {
                double acc = 0.0;
                const S* row = dyr + size_t(c) * t_len;
                for (int t = 0; t < t_len; ++t) acc += row[t];
                b_.grad.data[c] += S(acc);
            }
        }
        for (int k = 0; k < kernel_; ++k)
            for (int o = 0; o < out_ch_; ++o)
                for (int i = 0; i < in_ch_; ++i)
                    w_.grad.data[(size_t(o) * in_ch_ + i) * kernel_ + k] +=
                        dw_pack_.data[(size_t(k) * out_ch_ + o) * in_ch_ + i];
    }

    void collect(ParameterStore<S>& ps) {
        ps.add(&w_);
        ps.add(&b_);
    }

    Param<S>& weights() { return w_; }
    Param<S>& bias() { return b_; }
    int out_channels() const { return out_ch_; }

private:
    // Valid output range [t0, t1) for tap k plus the matching input offset.
    std::tuple<int, int, int> tap_range(int k, int t_len) const {
        int off = k * dilation_ - left_pad();  // input index = t + off
        int t0 = std::max(0, -off);
        int t1 = std::min(t_len, t_len - off);
        return {t0, t1, t0 + off};
    }

    void pack_weights() const {
        w_pack_.reshape({kernel_, out_ch_, in_ch_});
        for (int o = 0; o < out_ch_; ++o)
            for (int i = 0; i < in_ch_; ++i)
                for (int k = 0; k < kernel_; ++k)
                    w_pack_.data[(size_t(k) * out_ch_ + o) * in_ch_ + i] =
                        w_.value.data[(size_t(o) * in_ch_ + i) * kernel_ + k];
    }

    int in_ch_, out_ch_, kernel_, dilation_;
    Param<S> w_, b_;
    mutable Tensor<S> w_pack_;
    Tensor<S> dw_pack_;
};

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis of [B, C, T] (dense inputs are
// [B, C] with T = 1). Training mode normalizes with batch statistics and
// blends them into the running stats; inference uses the running stats.
template <typename S>
class BatchNorm1d {
public:
    struct Cache {
        std::vector<double> mean, inv_std;
    };

    BatchNorm1d(std::string name, int channels, double momentum = 0.9, double eps = 1e-5)
        : channels_(channels),
          momentum_(momentum),
          eps_(eps),
          gamma_(name + ".gamma", {channels}),
          beta_(name + ".beta", {channels}),
          run_mean_(name + ".running_mean", {channels}, false),
          run_var_(name + ".running_var", {channels}, false) {
        for (auto& v : gamma_.value.data) v = S(1);
        for (auto& v : run_var_.value.data) v = S(1);
    }

    void forward(const Tensor<S>& x, Tensor<S>& y, Mode mode, Cache& cache) {
        const int batch = x.shape[0];
        const int t_len = x.shape.size() == 3 ? x.shape[2] : 1;
        y.reshape(x.shape);
        cache.mean.assign(channels_, 0.0);
        cache.inv_std.assign(channels_, 0.0);

        if (mode == Mode::Training && batch < 2)
            throw data_error("batch normalization requires batch size >= 2 in training mode");

        const size_t n_per = size_t(batch) * t_len;
        for (int c = 0; c < channels_; ++c) {
            double mean, var;
            if (mode == Mode::Training) {
                double sum = 0.0;
                for (int r = 0; r < batch; ++r) {
                    const S* row = x.ptr() + (size_t(r) * channels_ + c) * t_len;
                    for (int t = 0; t < t_len; ++t) sum += row[t];
                }
                mean = sum / double(n_per);
                double acc = 0.0;
                for (int r = 0; r < batch; ++r) {
                    const S* row = x.ptr() + (size_t(r) * channels_ + c) * t_len;
                    for (int t = 0; t < t_len; ++t) {
                        double d = row[t] - mean;
                        acc += d * d;
                    }
                }
                var = acc / double(n_per);
                run_mean_.value.data[c] = S(momentum_ * run_mean_.value.data[c] + (1.0 - momentum_) * mean);
                run_var_.value.data[c] = S(momentum_ * run_var_.value.data[c] + (1.0 - momentum_) * var);
            } else {
                mean = run_mean_.value.data[c];
                var = run_var_.value.data[c];
            }
            double inv_std = 1.0 / std::sqrt(var + eps_);
            cache.mean[c] = mean;
            cache.inv_std[c] = inv_std;
            double g = gamma_.value.data[c], b = beta_.value.data[c];
            double scale = g * inv_std, shift = b - g * inv_std * mean;
            for (int r = 0; r < batch; ++r) {
                const S* xin = x.ptr() + (size_t(r) * channels_ + c) * t_len;
                S* yout = y.ptr() + (size_t(r) * channels_ + c) * t_len;
                for (int t = 0; t < t_len; ++t) yout[t] = S(scale * xin[t] + shift);
            }
        }
    }

    // Training-mode backward (batch statistics participate in the gradient).
    void backward(const Tensor<S>& x, const Cache& cache, const Tensor<S>& dy, Tensor<S>& dx) {
        const int batch = x.shape[0];
        const int t_len = x.shape.size() == 3 ? x.shape[2] : 1;
        dx.reshape(x.shape);
        const double n = double(size_t(batch) * t_len);
        for (int c = 0; c < channels_; ++c) {
            const double mean = cache.mean[c], inv_std = cache.inv_std[c];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int r = 0; r < batch; ++r) {
                const S* xr = x.ptr() + (size_t(r) * channels_ + c) * t_len;
                const S* dyr = dy.ptr() + (size_t(r) * channels_ + c) * t_len;
                for (int t = 0; t < t_len; ++t) {
                    double xhat = (xr[t] - mean) * inv_std;
                    sum_dy += dyr[t];
                    sum_dy_xhat += dyr[t] * xhat;
                }
            }
            gamma_.grad.data[c] += S(sum_dy_xhat);
            beta_.grad.data[c] += S(sum_dy);
            const double g = gamma_.value.data[c];
            for (int r = 0; r < batch; ++r) {
                const S* xr = x.ptr() + (size_t(r) * channels_ + c) * t_len;
                const S* dyr = dy.ptr() + (size_t(r) * channels_ + c) * t_len;
                S* dxr = dx.ptr() + (size_t(r) * channels_ + c) * t_len;
                for (int t = 0; t < t_len; ++t) {
                    double xhat = (xr[t] - mean) * inv_std;
                    dxr[t] = S(g * inv_std * (dyr[t] - sum_dy / n - xhat * sum_dy_xhat / n));
                }
            }
        }
    }

    // Inference-mode backward: running stats are constants.
    void backward_inference(const Tensor<S>& dy, Tensor<S>& dx) const {
        const int batch = dy.shape[0];
        const int t_len = dy.shape.size() == 3 ? dy.shape[2] : 1;
        dx.reshape(dy.shape);
        for (int c = 0; c < channels_; ++c) {
            double scale = gamma_.value.data[c] / std::sqrt(double(run_var_.value.data[c]) + eps_);
            for (int r = 0; r < batch; ++r) {
                const S* dyr = dy.ptr() + (size_t(r) * channels_ + c) * t_len;
                S* dxr = dx.ptr() + (size_t(r) * channels_ + c) * t_len;
                for (int t = 0; t < t_len; ++t) dxr[t] = S(scale * dyr[t]);
            }
        }
    }

    void collect(ParameterStore<S>& ps) {
        ps.add(&gamma_);
        ps.add(&beta_);
        ps.add(&run_mean_);
        ps.add(&run_var_);
    }

    Param<S>& gamma() { return gamma_; }
    Param<S>& beta() { return beta_; }
    Param<S>& running_mean() { return run_mean_; }
    Param<S>& running_var() { return run_var_; }
    double eps() const { return eps_; }

private:
    int channels_;
    double momentum_, eps_;
    Param<S> gamma_, beta_, run_mean_, run_var_;
};

// ---------------------------------------------------------------------------
template <typename S>
inline void relu_inplace(Tensor<S>& t) {
    for (auto& v : t.data)
        if (v < S(0)) v = S(0);
}

// Inverted dropout, in place. Inference is an exact identity (no call).
// The survivor mask is kept for the backward pass.
template <typename S>
class Dropout {
public:
    explicit Dropout(double rate) : rate_(rate) {
        if (rate < 0 || rate >= 1) throw numeric_error("dropout rate must lie in [0, 1)");
    }

    void forward_inplace(Tensor<S>& t, Mode mode, Rng& rng) {
        if (mode == Mode::Inference || rate_ == 0.0) {
            mask_.clear();
            return;
        }
        const S inv_keep = S(1.0 / (1.0 - rate_));
        mask_.resize(t.numel());
        for (size_t i = 0; i < t.numel(); ++i) {
            bool keep = rng.canonical() >= rate_;
            mask_[i] = keep;
            t.data[i] = keep ? t.data[i] * inv_keep : S(0);
        }
    }

    void backward_inplace(Tensor<S>& d) const {
        if (mask_.empty()) return;
        const S inv_keep = S(1.0 / (1.0 - rate_));
        for (size_t i = 0; i < d.numel(); ++i) d.data[i] = mask_[i] ? d.data[i] * inv_keep : S(0);
    }

    double rate() const { return rate_; }

private:
    double rate_;
    std::vector<uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Width-2, stride-2 max pooling; an odd trailing sample is dropped. Ties take
// the earlier index so gradients are deterministic.
template <typename S>
class MaxPool1d {
public:
    void forward(const Tensor<S>& x, Tensor<S>& y) {
        const int batch = x.shape[0], ch = x.shape[1], t_in = x.shape[2];
        if (t_in < 2) throw numeric_error("maxpool: input length must be >= 2");
        const int t_out = t_in / 2;
        y.reshape({batch, ch, t_out});
        argmax_.assign(size_t(batch) * ch * t_out, 0);
        for (size_t row = 0; row < size_t(batch) * ch; ++row) {
            const S* xin = x.ptr() + row * t_in;
            S* yout = y.ptr() + row * t_out;
            uint8_t* am = argmax_.data() + row * t_out;
            for (int t = 0; t < t_out; ++t) {
                S a = xin[2 * t], b = xin[2 * t + 1];
                bool second = b > a;
                yout[t] = second ? b : a;
                am[t] = second ? 1 : 0;
            }
        }
    }

    void backward(const Tensor<S>& dy, int t_in, Tensor<S>& dx) const {
        const int batch = dy.shape[0], ch = dy.shape[1], t_out = dy.shape[2];
        dx.reshape({batch, ch, t_in});
        for (size_t row = 0; row < size_t(batch) * ch; ++row) {
            const S* dyr = dy.ptr() + row * t_out;
            const uint8_t* am = argmax_.data() + row * t_out;
            S* dxr = dx.ptr() + row * t_in;
            for (int t = 0; t < t_out; ++t) dxr[2 * t + am[t]] += dyr[t];
        }
    }

private:
    std::vector<uint8_t> argmax_;
};

// ---------------------------------------------------------------------------
template <typename S>
class GlobalAvgPool {
public:
    void forward(const Tensor<S>& x, Tensor<S>& y) const {
        const int batch = x.shape[0], ch = x.shape[1], t_len = x.shape[2];
        if (t_len < 1) throw numeric_error("global average pool: empty time axis");
        y.reshape({batch, ch});
        for (int r = 0; r < batch; ++r)
            for (int c = 0; c < ch; ++c) {
                const S* row = x.ptr() + (size_t(r) * ch + c) * t_len;
                double acc = 0.0;
                for (int t = 0; t < t_len; ++t) acc += row[t];
                y.data[size_t(r) * ch + c] = S(acc / t_len);
            }
    }

    void backward(const Tensor<S>& dy, int t_len, Tensor<S>& dx) const {
        const int batch = dy.shape[0], ch = dy.shape[1];
        dx.reshape({batch, ch, t_len});
        for (int r = 0; r < batch; ++r)
            for (int c = 0; c < ch; ++c) {
                S g = dy.data[size_t(r) * ch + c] / S(t_len);
                S* row = dx.ptr() + (size_t(r) * ch + c) * t_len;
                for (int t = 0; t < t_len; ++t) row[t] = g;
            }
    }
};

// ---------------------------------------------------------------------------
template <typename S>
class Dense {
public:
    Dense(std::string name, int in_dim, int out_dim, Rng& rng)
        : in_dim_(in_dim),
          out_dim_(out_dim),
          w_(name + ".W", {out_dim, in_dim}),
          b_(name + ".b", {out_dim}) {
        he_uniform_init(w_.value, in_dim, rng);
    }

    void forward(const Tensor<S>& x, Tensor<S>& y) const {
        const int batch = x.shape[0];
        if (x.shape[1] != in_dim_) throw numeric_error(w_.name + ": input width mismatch");
        y.reshape({batch, out_dim_});
        blas::gemm(blas::Transpose::No, blas::Transpose::Yes, batch, out_dim_, in_dim_, S(1),
                   x.ptr(), in_dim_, w_.value.ptr(), in_dim_, S(0), y.ptr(), out_dim_);
        for (int r = 0; r < batch; ++r)
            for (int c = 0; c < out_dim_; ++c) y.data[size_t(r) * out_dim_ + c] += b_.value.data[c];
    }

    void backward(const Tensor<S>& x, const Tensor<S>& dy, Tensor<S>* dx) {
        const int batch = x.shape[0];
        if (dx) {
            dx->reshape({batch, in_dim_});
            blas::gemm(blas::Transpose::No, blas::Transpose::No, batch, in_dim_, out_dim_, S(1),
                       dy.ptr(), out_dim_, w_.value.ptr(), in_dim_, S(0), dx->ptr(), in_dim_);
        }
        blas::gemm(blas::Transpose::Yes, blas::Transpose::No, out_dim_, in_dim_, batch, S(1),
                   dy.ptr(), out_dim_, x.ptr(), in_dim_, S(1), w_.grad.ptr(), in_dim_);
        for (int c = 0; c < out_dim_; ++c) {
            double acc = 0.0;
            for (int r = 0; r < batch; ++r) acc += dy.data[size_t(r) * out_dim_ + c];
            b_.grad.data[c] += S(acc);
        }
    }

    void collect(ParameterStore<S>& ps) {
        ps.add(&w_);
        ps.add(&b_);
    }

    Param<S>& weights() { return w_; }
    Param<S>& bias() { return b_; }
    int out_dim() const { return out_dim_; }
    int in_dim() const { return in_dim_; }

private:
    int in_dim_, out_dim_;
    Param<S> w_, b_;
};

// ---------------------------------------------------------------------------
// Numerically stabilized two-class softmax with cross-entropy.
template <typename S>
struct SoftmaxCE {
    // Per-sample: returns {loss, probs}.
    static std::pair<double, std::array<double, 2>> eval(const S* logits, int true_class) {
        double m = std::max(double(logits[0]), double(logits[1]));
        double e0 = std::exp(double(logits[0]) - m), e1 = std::exp(double(logits[1]) - m);
        double z = e0 + e1;
        std::array<double, 2> p{e0 / z, e1 / z};
        double loss = -((double(logits[true_class]) - m) - std::log(z));
        return {loss, p};
    }

    // Batch mean loss; writes dloss/dlogits into dlogits.
    static double forward_backward(const Tensor<S>& logits, const std::vector<int>& labels,
                                   Tensor<S>& dlogits) {
        const int batch = logits.shape[0];
        dlogits.reshape(logits.shape);
        double total = 0.0;
        for (int r = 0; r < batch; ++r) {
            auto [loss, p] = eval(logits.ptr() + 2 * r, labels[r]);
            total += loss;
            dlogits.data[2 * r + 0] = S((p[0] - (labels[r] == 0 ? 1.0 : 0.0)) / batch);
            dlogits.data[2 * r + 1] = S((p[1] - (labels[r] == 1 ? 1.0 : 0.0)) / batch);
        }
        return total / batch;
    }
};

}  // namespace afnet::nn
