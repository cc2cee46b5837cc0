#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ssac/common.hpp"
#include "ssac/nn.hpp"
#include "ssac/rng.hpp"

using namespace ssac;
using namespace ssac::nn;

TEST_CASE("elu identities") {
  CHECK(elu(0.0) == 0.0);
  CHECK(elu(3.5) == 3.5);
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(elu(-40.0) == doctest::Approx(-1.0));  // saturates at -1
  CHECK(elu_prime(2.0) == 1.0);
  CHECK(elu_prime(0.0) == 1.0);
  CHECK(elu_prime(-1.0) == doctest::Approx(std::exp(-1.0)));
  // C1 joint at 0 and the derivative identity elu'(x) = elu(x) + 1 for x < 0.
  for (double x : {-0.3, -1.7, -5.0}) {
    CHECK(elu_prime(x) == doctest::Approx(elu(x) + 1.0));
  }
}

TEST_CASE("mlp_init: shapes, fan-in bound, zero biases, seed determinism") {
  const std::vector<std::size_t> sizes = {4, 8, 8, 2};
  const Mlp a = mlp_init(sizes, 42);
  CHECK(a.input_dim() == 4);
  CHECK(a.output_dim() == 2);
  CHECK(a.layer_count() == 3);
  CHECK(a.param_count() == 4 * 8 + 8 + 8 * 8 + 8 + 8 * 2 + 2);

  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (double w : a.weights[l]) {
      CHECK(std::abs(w) <= bound);
    }
    for (double b : a.biases[l]) CHECK(b == 0.0);
  }

  const Mlp b = mlp_init(sizes, 42);
  CHECK(a.weights == b.weights);
  const Mlp c = mlp_init(sizes, 43);
  CHECK(a.weights != c.weights);

  CHECK_THROWS_AS(mlp_init({4}, 1), ConfigError);
  CHECK_THROWS_AS(mlp_init({4, 0, 2}, 1), ConfigError);
}

TEST_CASE("forward: single linear layer is exactly Wx+b") {
  Mlp net;
  net.layer_sizes = {2, 2};
  net.weights = {{1.0, 2.0, 3.0, 4.0}};
  net.biases = {{0.5, -0.5}};
  const std::vector<double> x = {5.0, 6.0};
  const auto y = mlp_forward(net, x);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(17.5));
  CHECK(y[1] == doctest::Approx(38.5));
}

TEST_CASE("forward: hidden ELU, output linear (hand case)") {
  // [1 -> 2 -> 1]: W1 = [[1],[−1]], b1 = [0, 0]; W2 = [[2, 3]], b2 = [0.25].
  Mlp net;
  net.layer_sizes = {1, 2, 1};
  net.weights = {{1.0, -1.0}, {2.0, 3.0}};
  net.biases = {{0.0, 0.0}, {0.25}};
  const auto y = mlp_forward(net, std::vector<double>{0.5});
  // hidden = [elu(0.5), elu(-0.5)] = [0.5, e^{-0.5}-1]
  const double expected = 2.0 * 0.5 + 3.0 * (std::exp(-0.5) - 1.0) + 0.25;
  CHECK(y[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("backward matches the finite-difference oracle") {
  Rng rng(7);
  Mlp net = mlp_init({4, 8, 8, 2}, 11);
  const std::vector<double> x = {0.3, -1.2, 0.05, 2.0};
  const std::vector<double> target = {0.7, -0.4};

  // L = 0.5 * ||net(x) - target||^2
  auto loss_value = [&] {
    const auto y = mlp_forward(net, x);
    double L = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      L += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
    }
    return L;
  };

  ForwardCache cache;
  const auto y = mlp_forward(net, x, cache);
  std::vector<double> cot(y.begin(), y.end());
  for (std::size_t i = 0; i < cot.size(); ++i) cot[i] -= target[i];

  GradBundle grads = GradBundle::like(net);
  grads.zero();
  std::vector<double> input_cot(net.input_dim());
  mlp_backward(net, cache, cot, grads, input_cot.data());

  const GradBundle fd = finite_diff_grad(loss_value, net, 1e-6);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (std::size_t i = 0; i < grads.d_weights[l].size(); ++i) {
      CHECK(grads.d_weights[l][i] ==
            doctest::Approx(fd.d_weights[l][i]).epsilon(1e-5).scale(1.0));
    }
    for (std::size_t i = 0; i < grads.d_biases[l].size(); ++i) {
      CHECK(grads.d_biases[l][i] ==
            doctest::Approx(fd.d_biases[l][i]).epsilon(1e-5).scale(1.0));
    }
  }

  // Input gradient against central differences on the input.
  std::vector<double> xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6;
    xm[i] = x[i] + h;
    const auto yp = mlp_forward(net, xm);
    xm[i] = x[i] - h;
    const auto ym = mlp_forward(net, xm);
    xm[i] = x[i];
    double lp = 0.0, lm = 0.0;
    for (std::size_t j = 0; j < yp.size(); ++j) {
      lp += 0.5 * (yp[j] - target[j]) * (yp[j] - target[j]);
      lm += 0.5 * (ym[j] - target[j]) * (ym[j] - target[j]);
    }
    CHECK(input_cot[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
  }

  // mlp_input_grad returns the same input cotangent.
  std::vector<double> input_only(net.input_dim());
  mlp_input_grad(net, cache, cot, input_only.data());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(input_only[i] == doctest::Approx(input_cot[i]).epsilon(1e-12));
  }
}

TEST_CASE("backward single linear layer: outer-product rule") {
  // y = Wx + b, cotangent c: dW = c x^T, db = c, dx = W^T c.
  Mlp net;
  net.layer_sizes = {2, 2};
  net.weights = {{1.0, 2.0, 3.0, 4.0}};
  net.biases = {{0.0, 0.0}};
  ForwardCache cache;
  const std::vector<double> x = {5.0, 7.0};
  mlp_forward(net, x, cache);
  GradBundle g = GradBundle::like(net);
  g.zero();
  const std::vector<double> c = {1.0, -2.0};
  std::vector<double> dx(2);
  mlp_backward(net, cache, c, g, dx.data());
  CHECK(g.d_weights[0] == std::vector<double>{5.0, 7.0, -10.0, -14.0});
  CHECK(g.d_biases[0] == std::vector<double>{1.0, -2.0});
  CHECK(dx[0] == doctest::Approx(1.0 * 1 + 3.0 * -2));
  CHECK(dx[1] == doctest::Approx(2.0 * 1 + 4.0 * -2));
}

TEST_CASE("backward accumulates into grads") {
  Mlp net = mlp_init({3, 4, 1}, 5);
  ForwardCache cache;
  const std::vector<double> x = {0.1, 0.2, 0.3};
  mlp_forward(net, x, cache);
  GradBundle g = GradBundle::like(net);
  g.zero();
  const std::vector<double> cot = {1.0};
  mlp_backward(net, cache, cot, g);
  GradBundle g2 = GradBundle::like(net);
  g2.zero();
  mlp_backward(net, cache, cot, g2);
  mlp_backward(net, cache, cot, g2);  // accumulate twice
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (std::size_t i = 0; i < g.d_weights[l].size(); ++i) {
      CHECK(g2.d_weights[l][i] == doctest::Approx(2.0 * g.d_weights[l][i]));
    }
  }
}

TEST_CASE("LrSchedule endpoints and interior") {
  const LrSchedule s{1e-3, 1e-5, 1000};
  CHECK(s.at(0) == doctest::Approx(1e-3));
  CHECK(s.at(1000) == doctest::Approx(1e-5));
  CHECK(s.at(5000) == doctest::Approx(1e-5));
  CHECK(s.at(500) == doctest::Approx(1e-3 + (1e-5 - 1e-3) * 0.5));
  const LrSchedule flat{3e-4, 99.0, 0};  // horizon 0: constant at start
  CHECK(flat.at(0) == doctest::Approx(3e-4));
  CHECK(flat.at(1u << 20) == doctest::Approx(3e-4));
}

TEST_CASE("adam first step moves by ~ -lr * sign(g)") {
  Mlp net;
  net.layer_sizes = {1, 1};
  net.weights = {{0.5}};
  net.biases = {{0.25}};
  AdamState st = AdamState::like(net, LrSchedule{1e-2, 1e-2, 0});
  GradBundle g = GradBundle::like(net);
  g.zero();
  g.d_weights[0][0] = 3.0;
  g.d_biases[0][0] = -0.7;
  adam_step(net, g, st);
  // m-hat = g, v-hat = g^2 at t=1, so the step is lr * g / (|g| + eps).
  CHECK(net.weights[0][0] == doctest::Approx(0.5 - 1e-2 * 3.0 / (3.0 + 1e-8)));
  CHECK(net.biases[0][0] == doctest::Approx(0.25 + 1e-2 * 0.7 / (0.7 + 1e-8)));
  CHECK(st.step_count == 1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Mlp net = mlp_init({2, 3, 1}, 9);
  const Mlp before = net;
  AdamState st = AdamState::like(net, LrSchedule{1e-2, 1e-2, 0});
  GradBundle g = GradBundle::like(net);
  g.zero();
  adam_step(net, g, st);
  CHECK(net.weights == before.weights);
  CHECK(net.biases == before.biases);
}

TEST_CASE("adam: non-finite gradient throws TrainingError") {
  Mlp net = mlp_init({2, 2}, 1);
  AdamState st = AdamState::like(net, LrSchedule{1e-3, 1e-3, 0});
  GradBundle g = GradBundle::like(net);
  g.zero();
  g.d_weights[0][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(net, g, st), TrainingError);
}

TEST_CASE("adam drives a quadratic toward its minimum") {
  // f(w) = 0.5*(w - 3)^2 on a 1-parameter "net".
  Mlp net;
  net.layer_sizes = {1, 1};
  net.weights = {{-1.0}};
  net.biases = {{0.0}};
  AdamState st = AdamState::like(net, LrSchedule{5e-2, 5e-2, 0});
  GradBundle g = GradBundle::like(net);
  for (int i = 0; i < 400; ++i) {
    g.zero();
    g.d_weights[0][0] = net.weights[0][0] - 3.0;
    g.d_biases[0][0] = 0.0;
    adam_step(net, g, st);
  }
  CHECK(net.weights[0][0] == doctest::Approx(3.0).epsilon(1e-2));
}

TEST_CASE("ScalarAdam mirrors the vector path") {
  double p = 0.5;
  ScalarAdam sa;
  sa.lr = LrSchedule{1e-2, 1e-2, 0};
  sa.step(p, 3.0);
  CHECK(p == doctest::Approx(0.5 - 1e-2 * 3.0 / (3.0 + 1e-8)));
  CHECK(sa.step_count == 1);
}

TEST_CASE("project_params clamps into the box, infinite bound is a no-op") {
  Mlp net;
  net.layer_sizes = {1, 2};
  net.weights = {{5.0, -7.0}};
  net.biases = {{0.1, -0.2}};
  Mlp copy = net;
  project_params(copy, std::numeric_limits<double>::infinity());
  CHECK(copy.weights == net.weights);
  project_params(net, 1.5);
  CHECK(net.weights[0] == std::vector<double>{1.5, -1.5});
  CHECK(net.biases[0] == std::vector<double>{0.1, -0.2});
}

TEST_CASE("soft_update: tau endpoints and small-tau mix") {
  Mlp online = mlp_init({2, 3, 1}, 21);
  Mlp target = mlp_init({2, 3, 1}, 22);
  const Mlp target0 = target;

  Mlp t0 = target;
  soft_update(t0, online, 0.0);
  CHECK(t0.weights == target0.weights);  // tau = 0: unchanged

  Mlp t1 = target;
  soft_update(t1, online, 1.0);
  CHECK(t1.weights == online.weights);  // tau = 1: hard copy
  CHECK(t1.biases == online.biases);

  Mlp tm = target;
  soft_update(tm, online, 0.005);
  for (std::size_t l = 0; l < tm.layer_count(); ++l) {
    for (std::size_t i = 0; i < tm.weights[l].size(); ++i) {
      const double expect =
          0.005 * online.weights[l][i] + 0.995 * target0.weights[l][i];
      CHECK(tm.weights[l][i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("GradBundle arithmetic") {
  Mlp net = mlp_init({2, 2, 1}, 3);
  GradBundle a = GradBundle::like(net);
  a.zero();
  a.d_weights[0][0] = 2.0;
  a.d_biases[1][0] = -4.0;
  CHECK(a.max_abs() == doctest::Approx(4.0));
  CHECK(a.finite());
  a.scale(0.5);
  CHECK(a.d_weights[0][0] == doctest::Approx(1.0));
  GradBundle b = GradBundle::like(net);
  b.zero();
  b.axpy(3.0, a);
  CHECK(b.d_weights[0][0] == doctest::Approx(3.0));
  CHECK(b.d_biases[1][0] == doctest::Approx(-6.0));
  b.d_weights[0][1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(b.finite());
}
