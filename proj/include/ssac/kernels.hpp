#pragma once

#include <cstddef>

// Dense-math micro-kernels behind the network engine. A scalar reference
// implementation always exists; SIMD variants (AVX2 on x86-64, NEON on
// aarch64) are selected at runtime and must agree with the reference up to
// summation-order rounding. All matrices are row-major.

namespace ssac::kern {

struct Ops {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // y = W x + b   (W: rows x cols; b may be nullptr for y = W x)
  void (*matvec)(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols);
  // out = W^T d   (overwrites out, length cols)
  void (*matvec_t)(const double* w, const double* d, double* out,
                   std::size_t rows, std::size_t cols);
  // G += s * d x^T   (rank-1 accumulate)
  void (*ger)(double* g, const double* d, const double* x, double s,
              std::size_t rows, std::size_t cols);
  // Adam with precomputed bias corrections: m,v updated in place, then
  // p[i] -= lr * (m[i]*inv_bc1) / (sqrt(v[i]*inv_bc2) + eps)
  void (*adam)(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double inv_bc1,
               double inv_bc2, double eps);
  // p[i] = clamp(p[i], -bound, bound)
  void (*clamp)(double* p, double bound, std::size_t n);
  // t[i] = tau*x[i] + (1-tau)*t[i]   (Polyak average)
  void (*lerp)(double* t, const double* x, double tau, std::size_t n);
};

const Ops& scalar_ops();

// Currently dispatched implementation. Defaults to the best supported SIMD
// variant, falling back to scalar.
const Ops& ops();

// Force a specific implementation: "scalar", "avx2", "neon" or "auto".
// Returns false if the requested variant is unavailable on this machine.
bool select(const char* name);

bool avx2_supported();
bool neon_supported();

}  // namespace ssac::kern
