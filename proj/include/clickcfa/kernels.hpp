#pragma once

#include <cstddef>
#include <string>

// Double-precision inner-loop kernels. Scalar reference implementations plus
// SIMD variants (AVX2+FMA on x86-64, NEON on aarch64) selected once at
// runtime. The scalar versions are the reference; SIMD variants are
// equivalence-tested against them. Reduction order inside each kernel is
// fixed, so a given backend is bit-deterministic run to run.

namespace clickcfa::kernels {

struct Ops {
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
    // y[r] += sum_c W[r*cols + c] * x[c]        (W is rows x cols, row-major)
    void (*matvec_acc)(double* y, const double* w, const double* x, std::size_t rows,
                       std::size_t cols);
    // y[c] += sum_r W[r*cols + c] * g[r]
    void (*matvec_t_acc)(double* y, const double* w, const double* g, std::size_t rows,
                         std::size_t cols);
    // W[r*cols + c] += g[r] * x[c]
    void (*ger_acc)(double* w, const double* g, const double* x, std::size_t rows,
                    std::size_t cols);
    // sum_i (a[i]-b[i])^2
    double (*sqdist)(const double* a, const double* b, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void matvec_acc(double* y, const double* w, const double* x, std::size_t rows, std::size_t cols);
void matvec_t_acc(double* y, const double* w, const double* g, std::size_t rows, std::size_t cols);
void ger_acc(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols);
double sqdist(const double* a, const double* b, std::size_t n);
const Ops& ops();
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CLICKCFA_X86 1
namespace avx2 {
const Ops& ops(); // valid to call only when supported()
bool supported();
} // namespace avx2
#endif

#if defined(__aarch64__)
#define CLICKCFA_NEON 1
namespace neon {
const Ops& ops();
bool supported();
} // namespace neon
#endif

// Active backend. Picked once (env CLICKCFA_KERNELS=scalar|avx2|neon|auto can
// override); stable for the life of the process.
const Ops& active();
const std::string& backend_name();
void force_backend(const std::string& name); // tests only; "auto" re-dispatches

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double* y, double alpha, const double* x, std::size_t n) {
    active().axpy(y, alpha, x, n);
}
inline void matvec_acc(double* y, const double* w, const double* x, std::size_t rows,
                       std::size_t cols) {
    active().matvec_acc(y, w, x, rows, cols);
}
inline void matvec_t_acc(double* y, const double* w, const double* g, std::size_t rows,
                         std::size_t cols) {
    active().matvec_t_acc(y, w, g, rows, cols);
}
inline void ger_acc(double* w, const double* g, const double* x, std::size_t rows,
                    std::size_t cols) {
    active().ger_acc(w, g, x, rows, cols);
}
inline double sqdist(const double* a, const double* b, std::size_t n) {
    return active().sqdist(a, b, n);
}

} // namespace clickcfa::kernels
