#include "clickcfa/kernels.hpp"

namespace clickcfa::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_acc(double* y, const double* w, const double* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
        y[r] += s;
    }
}

void matvec_t_acc(double* y, const double* w, const double* g, std::size_t rows,
                  std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) y[c] += gr * row[c];
    }
}

void ger_acc(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    }
}

double sqdist(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

const Ops& ops() {
    static const Ops table{dot, axpy, matvec_acc, matvec_t_acc, ger_acc, sqdist};
    return table;
}

} // namespace clickcfa::kernels::scalar
