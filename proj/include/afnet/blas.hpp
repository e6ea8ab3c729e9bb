#pragma once

// GEMM backend. OpenBLAS is loaded with dlopen instead of being linked so the
// OPENBLAS_CORETYPE override below is in place before the library's
// constructor runs its one-shot kernel dispatch. On VMs that mask the CPU
// model, OpenBLAS otherwise falls back to a generic kernel several times
// slower than the AVX-512 one the hardware supports.

#include <dlfcn.h>

#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace afnet::blas {

enum class Transpose { No, Yes };

namespace detail {

using sgemm_fn = void (*)(int order, int transa, int transb, int m, int n, int k, float alpha,
                          const float* a, int lda, const float* b, int ldb, float beta, float* c,
                          int ldc);
using dgemm_fn = void (*)(int order, int transa, int transb, int m, int n, int k, double alpha,
                          const double* a, int lda, const double* b, int ldb, double beta,
                          double* c, int ldc);
using set_threads_fn = void (*)(int);

struct Backend {
    sgemm_fn sgemm = nullptr;
    dgemm_fn dgemm = nullptr;
    set_threads_fn set_threads = nullptr;
};

inline const Backend& backend() {
    static Backend be = [] {
        if (!std::getenv("OPENBLAS_CORETYPE") && __builtin_cpu_supports("avx512f"))
            setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
        void* h = dlopen("libopenblas.so.0", RTLD_NOW | RTLD_LOCAL);
        if (!h) h = dlopen("libopenblas.so", RTLD_NOW | RTLD_LOCAL);
        if (!h) throw std::runtime_error("libopenblas not found (needed for conv/dense layers)");
        Backend b;
        b.sgemm = reinterpret_cast<sgemm_fn>(dlsym(h, "cblas_sgemm"));
        b.dgemm = reinterpret_cast<dgemm_fn>(dlsym(h, "cblas_dgemm"));
        b.set_threads = reinterpret_cast<set_threads_fn>(dlsym(h, "openblas_set_num_threads"));
        if (!b.sgemm || !b.dgemm) throw std::runtime_error("cblas_gemm symbols missing");
        return b;
    }();
    return be;
}

constexpr int kRowMajor = 101;
constexpr int kNoTrans = 111;
constexpr int kTrans = 112;

}  // namespace detail

inline void set_threads(int n) {
    if (n > 0 && detail::backend().set_threads) detail::backend().set_threads(n);
}

// Row-major C[m x n] = alpha * op(A) op(B) + beta * C.
inline void gemm(Transpose ta, Transpose tb, int m, int n, int k, float alpha, const float* a,
                 int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    detail::backend().sgemm(detail::kRowMajor, ta == Transpose::Yes ? detail::kTrans : detail::kNoTrans,
                            tb == Transpose::Yes ? detail::kTrans : detail::kNoTrans, m, n, k, alpha,
                            a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(Transpose ta, Transpose tb, int m, int n, int k, double alpha, const double* a,
                 int lda, const double* b, int ldb, double beta, double* c, int ldc) {
    detail::backend().dgemm(detail::kRowMajor, ta == Transpose::Yes ? detail::kTrans : detail::kNoTrans,
                            tb == Transpose::Yes ? detail::kTrans : detail::kNoTrans, m, n, k, alpha,
                            a, lda, b, ldb, beta, c, ldc);
}

}  // namespace afnet::blas
