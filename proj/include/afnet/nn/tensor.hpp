#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "afnet/common.hpp"

namespace afnet::nn {

// Dense row-major tensor. Shapes are small (rank <= 3 in practice); all the
// heavy lifting happens through raw pointers handed to the BLAS backend.
template <typename S>
struct Tensor {
    std::vector<int> shape;
    std::vector<S> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
        data.assign(numel_of(shape), S(0));
    }

    static size_t numel_of(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) n *= size_t(d);
        return n;
    }

    size_t numel() const { return data.size(); }
    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }

    void reshape(std::vector<int> shp) {
        shape = std::move(shp);
        data.assign(numel_of(shape), S(0));
    }
    void zero() { std::fill(data.begin(), data.end(), S(0)); }

    template <typename T>
    void copy_from(const Tensor<T>& o) {
        if (o.numel() != numel()) throw numeric_error("tensor copy across mismatched shapes");
        for (size_t i = 0; i < data.size(); ++i) data[i] = S(o.data[i]);
    }
};

template <typename S>
struct Param {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, std::vector<int> shape, bool train = true)
        : name(std::move(n)), value(shape), grad(std::move(shape)), trainable(train) {}
};

// Flat, ordered view over a model's parameters. Names are unique; iteration
// order is the registration order, which fixes optimizer update order.
template <typename S>
struct ParameterStore {
    std::vector<Param<S>*> items;

    void add(Param<S>* p) {
        for (auto* q : items)
            if (q->name == p->name) throw numeric_error("duplicate parameter name: " + p->name);
        items.push_back(p);
    }
    Param<S>* find(const std::string& name) const {
        for (auto* p : items)
            if (p->name == name) return p;
        return nullptr;
    }
    void zero_grad() {
        for (auto* p : items) p->grad.zero();
    }
    size_t trainable_count() const {
        size_t n = 0;
        for (auto* p : items)
            if (p->trainable) n += p->value.numel();
        return n;
    }
};

}  // namespace afnet::nn
