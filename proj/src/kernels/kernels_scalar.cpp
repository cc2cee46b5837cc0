#include "ssac/kernels.hpp"

#include <algorithm>
#include <cmath>

// Reference kernels. Plain loops, one rounding per statement; the SIMD
// variants are tested against these.

namespace ssac::kern {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void matvec_scalar(const double* w, const double* x, const double* b, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = b ? b[r] : 0.0;
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
    y[r] = s;
  }
}

void matvec_t_scalar(const double* w, const double* d, double* out,
                     std::size_t rows, std::size_t cols) {
  std::fill(out, out + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double dr = d[r];
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += dr * wr[c];
  }
}

void ger_scalar(double* g, const double* d, const double* x, double s,
                std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double dr = s * d[r];
    double* gr = g + r * cols;
    for (std::size_t c = 0; c < cols; ++c) gr[c] += dr * x[c];
  }
}

void adam_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double inv_bc1,
                 double inv_bc2, double eps) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    const double mhat = m[i] * inv_bc1;
    const double vhat = v[i] * inv_bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void clamp_scalar(double* p, double bound, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(p[i], -bound, bound);
}

void lerp_scalar(double* t, const double* x, double tau, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) t[i] = tau * x[i] + (1.0 - tau) * t[i];
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops k = {
      "scalar",    dot_scalar,  axpy_scalar,  matvec_scalar, matvec_t_scalar,
      ger_scalar,  adam_scalar, clamp_scalar, lerp_scalar,
  };
  return k;
}

}  // namespace ssac::kern
