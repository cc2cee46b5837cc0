#include "ssac/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

// NEON variants, 2 doubles per lane (AdvSIMD is baseline on AArch64, so no
// runtime probe is needed beyond the architecture itself).

namespace ssac::kern {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
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

void axpy_neon(double* y, double a, const double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void matvec_neon(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double base = b ? b[r] : 0.0;
    y[r] = base + dot_neon(w + r * cols, x, cols);
  }
}

void matvec_t_neon(const double* w, const double* d, double* out,
                   std::size_t rows, std::size_t cols) {
  std::fill(out, out + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_neon(out, d[r], w + r * cols, cols);
  }
}

void ger_neon(double* g, const double* d, const double* x, double s,
              std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_neon(g + r * cols, s * d[r], x, cols);
  }
}

void adam_neon(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double inv_bc1,
               double inv_bc2, double eps) {
  const float64x2_t vb1 = vdupq_n_f64(beta1);
  const float64x2_t vb1c = vdupq_n_f64(1.0 - beta1);
  const float64x2_t vb2 = vdupq_n_f64(beta2);
  const float64x2_t vb2c = vdupq_n_f64(1.0 - beta2);
  const float64x2_t vbc1 = vdupq_n_f64(inv_bc1);
  const float64x2_t vbc2 = vdupq_n_f64(inv_bc2);
  const float64x2_t vlr = vdupq_n_f64(lr);
  const float64x2_t veps = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vg = vld1q_f64(g + i);
    float64x2_t vm = vmulq_f64(vb1, vld1q_f64(m + i));
    vm = vfmaq_f64(vm, vb1c, vg);
    float64x2_t vv = vmulq_f64(vb2, vld1q_f64(v + i));
    vv = vfmaq_f64(vv, vb2c, vmulq_f64(vg, vg));
    vst1q_f64(m + i, vm);
    vst1q_f64(v + i, vv);
    const float64x2_t mhat = vmulq_f64(vm, vbc1);
    const float64x2_t vhat = vmulq_f64(vv, vbc2);
    const float64x2_t denom = vaddq_f64(vsqrtq_f64(vhat), veps);
    const float64x2_t step = vdivq_f64(vmulq_f64(vlr, mhat), denom);
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    const double mhat = m[i] * inv_bc1;
    const double vhat = v[i] * inv_bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void clamp_neon(double* p, double bound, std::size_t n) {
  const float64x2_t vhi = vdupq_n_f64(bound);
  const float64x2_t vlo = vdupq_n_f64(-bound);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vp = vld1q_f64(p + i);
    vp = vminq_f64(vhi, vmaxq_f64(vlo, vp));
    vst1q_f64(p + i, vp);
  }
  for (; i < n; ++i) p[i] = std::clamp(p[i], -bound, bound);
}

void lerp_neon(double* t, const double* x, double tau, std::size_t n) {
  const float64x2_t vtau = vdupq_n_f64(tau);
  const float64x2_t vkeep = vdupq_n_f64(1.0 - tau);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vt = vmulq_f64(vkeep, vld1q_f64(t + i));
    vt = vfmaq_f64(vt, vtau, vld1q_f64(x + i));
    vst1q_f64(t + i, vt);
  }
  for (; i < n; ++i) t[i] = tau * x[i] + (1.0 - tau) * t[i];
}

}  // namespace

const Ops* neon_ops_or_null() {
  static const Ops k = {
      "neon",    dot_neon,  axpy_neon,  matvec_neon, matvec_t_neon,
      ger_neon,  adam_neon, clamp_neon, lerp_neon,
  };
  return &k;
}

bool neon_supported() { return true; }

}  // namespace ssac::kern

#else  // non-aarch64 build: variant absent.

namespace ssac::kern {
const Ops* neon_ops_or_null() { return nullptr; }
bool neon_supported() { return false; }
}  // namespace ssac::kern

#endif
