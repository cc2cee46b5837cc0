#include "ssac/kernels.hpp"

#if defined(__x86_64__) && defined(__GNUC__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

// AVX2+FMA variants, 4 doubles per lane. Compiled with per-function target
// attributes so the translation unit builds without -mavx2; dispatch.cpp
// checks cpu support before handing these out. Sums are vector-accumulated
// and reduced at the end, so results differ from the scalar reference only
// by summation order.

#define SSAC_AVX2 __attribute__((target("avx2,fma")))

namespace ssac::kern {
namespace {

SSAC_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

SSAC_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

SSAC_AVX2 void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

SSAC_AVX2 void matvec_avx2(const double* w, const double* x, const double* b,
                           double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double base = b ? b[r] : 0.0;
    y[r] = base + dot_avx2(w + r * cols, x, cols);
  }
}

SSAC_AVX2 void matvec_t_avx2(const double* w, const double* d, double* out,
                             std::size_t rows, std::size_t cols) {
  std::fill(out, out + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2(out, d[r], w + r * cols, cols);
  }
}

SSAC_AVX2 void ger_avx2(double* g, const double* d, const double* x, double s,
                        std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2(g + r * cols, s * d[r], x, cols);
  }
}

SSAC_AVX2 void adam_avx2(double* p, double* m, double* v, const double* g,
                         std::size_t n, double lr, double beta1, double beta2,
                         double inv_bc1, double inv_bc2, double eps) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d vbc1 = _mm256_set1_pd(inv_bc1);
  const __m256d vbc2 = _mm256_set1_pd(inv_bc2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i));
    vm = _mm256_fmadd_pd(vb1c, vg, vm);
    __m256d vv = _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i));
    vv = _mm256_fmadd_pd(vb2c, _mm256_mul_pd(vg, vg), vv);
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_mul_pd(vm, vbc1);
    const __m256d vhat = _mm256_mul_pd(vv, vbc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    const double mhat = m[i] * inv_bc1;
    const double vhat = v[i] * inv_bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

SSAC_AVX2 void clamp_avx2(double* p, double bound, std::size_t n) {
  const __m256d vhi = _mm256_set1_pd(bound);
  const __m256d vlo = _mm256_set1_pd(-bound);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vp = _mm256_loadu_pd(p + i);
    vp = _mm256_min_pd(vhi, _mm256_max_pd(vlo, vp));
    _mm256_storeu_pd(p + i, vp);
  }
  for (; i < n; ++i) p[i] = std::clamp(p[i], -bound, bound);
}

SSAC_AVX2 void lerp_avx2(double* t, const double* x, double tau, std::size_t n) {
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d vkeep = _mm256_set1_pd(1.0 - tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vt = _mm256_mul_pd(vkeep, _mm256_loadu_pd(t + i));
    vt = _mm256_fmadd_pd(vtau, _mm256_loadu_pd(x + i), vt);
    _mm256_storeu_pd(t + i, vt);
  }
  for (; i < n; ++i) t[i] = tau * x[i] + (1.0 - tau) * t[i];
}

}  // namespace

const Ops* avx2_ops_or_null() {
  static const Ops k = {
      "avx2",    dot_avx2,  axpy_avx2,  matvec_avx2, matvec_t_avx2,
      ger_avx2,  adam_avx2, clamp_avx2, lerp_avx2,
  };
  return &k;
}

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace ssac::kern

#else  // non-x86 build: variant absent.

namespace ssac::kern {
const Ops* avx2_ops_or_null() { return nullptr; }
bool avx2_supported() { return false; }
}  // namespace ssac::kern

#endif
