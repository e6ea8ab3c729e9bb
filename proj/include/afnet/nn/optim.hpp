#pragma once

// Adam with bias correction, and the step-decay learning-rate schedule.

#include <cmath>

#include "afnet/nn/tensor.hpp"

namespace afnet::nn {

inline double lr_at_epoch(int epoch, double lr0 = 0.01, int half_period = 15) {
    if (epoch < 0) throw numeric_error("epoch must be non-negative");
    return lr0 * std::pow(0.5, double(epoch / half_period));
}

template <typename S>
class Adam {
public:
    explicit Adam(const ParameterStore<S>& params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto* p : params.items)
            if (p->trainable) {
                m_.emplace_back(p->value.shape);
                v_.emplace_back(p->value.shape);
            }
    }

    long steps() const { return t_; }

    void step(const ParameterStore<S>& params, double lr) {
        if (!(lr > 0)) throw numeric_error("adam: learning rate must be positive");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, double(t_));
        const double c2 = 1.0 - std::pow(beta2_, double(t_));
        size_t slot = 0;
        for (auto* p : params.items) {
            if (!p->trainable) continue;
            Tensor<S>& m = m_[slot];
            Tensor<S>& v = v_[slot];
            ++slot;
            for (size_t i = 0; i < p->value.numel(); ++i) {
                double g = p->grad.data[i];
                if (std::isnan(g))
                    throw numeric_error("NaN gradient in parameter " + p->name);
                double mi = beta1_ * m.data[i] + (1.0 - beta1_) * g;
                double vi = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
                m.data[i] = S(mi);
                v.data[i] = S(vi);
                p->value.data[i] -= S(lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
            }
        }
    }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor<S>> m_, v_;
};

}  // namespace afnet::nn
