#include "clickcfa/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace clickcfa::kernels::neon {

namespace {

double dot_impl(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_impl(double* y, double alpha, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_acc_impl(double* y, const double* w, const double* x, std::size_t rows,
                     std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] += dot_impl(w + r * cols, x, cols);
}

void matvec_t_acc_impl(double* y, const double* w, const double* g, std::size_t rows,
                       std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_impl(y, g[r], w + r * cols, cols);
}

void ger_acc_impl(double* w, const double* g, const double* x, std::size_t rows,
                  std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_impl(w + r * cols, g[r], x, cols);
}

double sqdist_impl(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

bool supported() { return true; } // NEON is baseline on aarch64

const Ops& ops() {
    static const Ops table{dot_impl, axpy_impl, matvec_acc_impl, matvec_t_acc_impl, ger_acc_impl,
                           sqdist_impl};
    return table;
}

} // namespace clickcfa::kernels::neon

#endif // aarch64
