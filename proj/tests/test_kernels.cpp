#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ssac/kernels.hpp"
#include "ssac/rng.hpp"

using ssac::Rng;
using namespace ssac::kern;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// SIMD variants reorder the summation, so equality is up to rounding.
void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double tol = 1e-13) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    CHECK(std::abs(a[i] - b[i]) / denom <= tol);
  }
}

// Every available non-scalar backend; empty on machines with neither.
std::vector<const Ops*> simd_backends() {
  std::vector<const Ops*> v;
  if (avx2_supported()) {
    REQUIRE(select("avx2"));
    v.push_back(&ops());
  }
  if (neon_supported()) {
    REQUIRE(select("neon"));
    v.push_back(&ops());
  }
  select("auto");
  return v;
}

// Sizes straddling SIMD widths: scalar-only, one lane, odd tails, larger.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 64, 65, 200};

}  // namespace

TEST_CASE("selection: scalar always available, auto never fails") {
  CHECK(select("scalar"));
  CHECK(std::string(ops().name) == "scalar");
  CHECK(select("auto"));
  CHECK_FALSE(select("definitely-not-a-backend"));
  // A failed select leaves the previous choice in place.
  CHECK(std::string(ops().name) == ops().name);
  if (!avx2_supported()) CHECK_FALSE(select("avx2"));
  if (!neon_supported()) CHECK_FALSE(select("neon"));
}

TEST_CASE("dot/axpy agree with scalar reference on all tail sizes") {
  const Ops& ref = scalar_ops();
  Rng rng(99);
  for (const Ops* simd : simd_backends()) {
    for (std::size_t n : kSizes) {
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);
      const double d_ref = ref.dot(a.data(), b.data(), n);
      const double d_simd = simd->dot(a.data(), b.data(), n);
      CHECK(std::abs(d_ref - d_simd) <=
            1e-13 * std::max({std::abs(d_ref), std::abs(d_simd), 1.0}));

      auto y_ref = random_vec(n, rng);
      auto y_simd = y_ref;
      ref.axpy(y_ref.data(), 0.37, a.data(), n);
      simd->axpy(y_simd.data(), 0.37, a.data(), n);
      check_close(y_ref, y_simd);
    }
  }
}

TEST_CASE("matvec/matvec_t/ger agree with scalar reference") {
  const Ops& ref = scalar_ops();
  Rng rng(7);
  const std::size_t dims[] = {1, 2, 3, 5, 8, 13, 64};
  for (const Ops* simd : simd_backends()) {
    for (std::size_t rows : dims) {
      for (std::size_t cols : dims) {
        const auto w = random_vec(rows * cols, rng);
        const auto x = random_vec(cols, rng);
        const auto bias = random_vec(rows, rng);
        const auto d = random_vec(rows, rng);

        std::vector<double> y_ref(rows), y_simd(rows);
        ref.matvec(w.data(), x.data(), bias.data(), y_ref.data(), rows, cols);
        simd->matvec(w.data(), x.data(), bias.data(), y_simd.data(), rows, cols);
        check_close(y_ref, y_simd);

        // nullptr bias means y = Wx.
        ref.matvec(w.data(), x.data(), nullptr, y_ref.data(), rows, cols);
        simd->matvec(w.data(), x.data(), nullptr, y_simd.data(), rows, cols);
        check_close(y_ref, y_simd);

        std::vector<double> t_ref(cols), t_simd(cols);
        ref.matvec_t(w.data(), d.data(), t_ref.data(), rows, cols);
        simd->matvec_t(w.data(), d.data(), t_simd.data(), rows, cols);
        check_close(t_ref, t_simd);

        auto g_ref = random_vec(rows * cols, rng);
        auto g_simd = g_ref;
        ref.ger(g_ref.data(), d.data(), x.data(), 0.83, rows, cols);
        simd->ger(g_simd.data(), d.data(), x.data(), 0.83, rows, cols);
        check_close(g_ref, g_simd);
      }
    }
  }
}

TEST_CASE("adam/clamp/lerp agree with scalar reference") {
  const Ops& ref = scalar_ops();
  Rng rng(31);
  for (const Ops* simd : simd_backends()) {
    for (std::size_t n : kSizes) {
      auto p_ref = random_vec(n, rng);
      auto m_ref = random_vec(n, rng, 0.1);
      auto v_ref = random_vec(n, rng, 0.1);
      for (auto& x : v_ref) x = std::abs(x);
      const auto g = random_vec(n, rng);
      auto p_simd = p_ref;
      auto m_simd = m_ref;
      auto v_simd = v_ref;

      const double inv_bc1 = 1.0 / (1.0 - std::pow(0.9, 7));
      const double inv_bc2 = 1.0 / (1.0 - std::pow(0.999, 7));
      ref.adam(p_ref.data(), m_ref.data(), v_ref.data(), g.data(), n, 3e-4, 0.9, 0.999,
               inv_bc1, inv_bc2, 1e-8);
      simd->adam(p_simd.data(), m_simd.data(), v_simd.data(), g.data(), n, 3e-4, 0.9,
                 0.999, inv_bc1, inv_bc2, 1e-8);
      check_close(p_ref, p_simd);
      check_close(m_ref, m_simd);
      check_close(v_ref, v_simd);

      auto c_ref = random_vec(n, rng, 3.0);
      auto c_simd = c_ref;
      ref.clamp(c_ref.data(), 1.5, n);
      simd->clamp(c_simd.data(), 1.5, n);
      check_close(c_ref, c_simd, 0.0);  // clamp is exact, no arithmetic

      auto t_ref = random_vec(n, rng);
      auto t_simd = t_ref;
      const auto xsrc = random_vec(n, rng);
      ref.lerp(t_ref.data(), xsrc.data(), 0.005, n);
      simd->lerp(t_simd.data(), xsrc.data(), 0.005, n);
      check_close(t_ref, t_simd);
    }
  }
}

TEST_CASE("scalar kernels: hand-checked values") {
  const Ops& k = scalar_ops();
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, 5.0, 6.0};
  CHECK(k.dot(a, b, 3) == doctest::Approx(32.0));

  double y[] = {1.0, 1.0};
  const double x[] = {10.0, 20.0};
  k.axpy(y, 0.5, x, 2);
  CHECK(y[0] == doctest::Approx(6.0));
  CHECK(y[1] == doctest::Approx(11.0));

  // W = [[1,2],[3,4]], x = [5,6], b = [0.5, -0.5]
  const double w[] = {1.0, 2.0, 3.0, 4.0};
  const double xv[] = {5.0, 6.0};
  const double bias[] = {0.5, -0.5};
  double out[2];
  k.matvec(w, xv, bias, out, 2, 2);
  CHECK(out[0] == doctest::Approx(17.5));
  CHECK(out[1] == doctest::Approx(38.5));

  const double d[] = {1.0, -1.0};
  double t[2];
  k.matvec_t(w, d, t, 2, 2);
  CHECK(t[0] == doctest::Approx(-2.0));  // 1*1 + 3*(-1)
  CHECK(t[1] == doctest::Approx(-2.0));  // 2*1 + 4*(-1)

  double gmat[] = {0.0, 0.0, 0.0, 0.0};
  k.ger(gmat, d, xv, 2.0, 2, 2);
  CHECK(gmat[0] == doctest::Approx(10.0));   // 2 * 1 * 5
  CHECK(gmat[1] == doctest::Approx(12.0));   // 2 * 1 * 6
  CHECK(gmat[2] == doctest::Approx(-10.0));  // 2 * -1 * 5
  CHECK(gmat[3] == doctest::Approx(-12.0));
}

TEST_CASE("lerp endpoints: tau=0 identity, tau=1 copy") {
  const Ops& k = scalar_ops();
  std::vector<double> t = {1.0, 2.0, 3.0};
  const std::vector<double> x = {7.0, 8.0, 9.0};
  auto t0 = t;
  k.lerp(t0.data(), x.data(), 0.0, 3);
  CHECK(t0 == t);
  auto t1 = t;
  k.lerp(t1.data(), x.data(), 1.0, 3);
  CHECK(t1 == x);
}
