#pragma once

#include <cstdint>
#include <random>

namespace afnet::nn {

// Run-level random source for weight init and dropout masks. Draws go through
// raw 64-bit output so mask generation is cheap and identical across standard
// library implementations.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(uint64_t seed) : gen(seed) {}

    uint64_t bits() { return gen(); }

    // uniform in [0, 1)
    double canonical() { return double(gen() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }
};

}  // namespace afnet::nn
