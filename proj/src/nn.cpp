#include "ssac/nn.hpp"

#include <algorithm>
#include <cmath>

#include "ssac/common.hpp"
#include "ssac/kernels.hpp"
#include "ssac/rng.hpp"

namespace ssac::nn {

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + biases[l].size();
  }
  return n;
}

Mlp mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  require(layer_sizes.size() >= 2, "mlp_init: need at least input and output layers");
  for (std::size_t s : layer_sizes) {
    require(s > 0, "mlp_init: layer sizes must be positive");
  }
  Mlp net;
  net.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t rows = layer_sizes[l + 1];
    const std::size_t cols = layer_sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::vector<double> w(rows * cols);
    for (double& x : w) x = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(rows, 0.0);
  }
  return net;
}

std::span<const double> mlp_forward(const Mlp& net, std::span<const double> input,
                                    ForwardCache& cache) {
  require(input.size() == net.input_dim(), "mlp_forward: input dimension mismatch");
  const std::size_t L = net.layer_count();
  cache.input.assign(input.begin(), input.end());
  cache.pre.resize(L);
  cache.act.resize(L > 0 ? L - 1 : 0);
  const auto& k = kern::ops();
  const double* x = cache.input.data();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t rows = net.layer_sizes[l + 1];
    const std::size_t cols = net.layer_sizes[l];
    cache.pre[l].resize(rows);
    k.matvec(net.weights[l].data(), x, net.biases[l].data(), cache.pre[l].data(),
             rows, cols);
    if (l + 1 < L) {
      cache.act[l].resize(rows);
      for (std::size_t i = 0; i < rows; ++i) cache.act[l][i] = elu(cache.pre[l][i]);
      x = cache.act[l].data();
    }
  }
  return cache.pre.back();
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  ForwardCache cache;
  auto out = mlp_forward(net, input, cache);
  return std::vector<double>(out.begin(), out.end());
}

GradBundle GradBundle::like(const Mlp& net) {
  GradBundle g;
  g.d_weights.reserve(net.weights.size());
  g.d_biases.reserve(net.biases.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.d_weights.emplace_back(net.weights[l].size(), 0.0);
    g.d_biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return g;
}

void GradBundle::zero() {
  for (auto& w : d_weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : d_biases) std::fill(b.begin(), b.end(), 0.0);
}

void GradBundle::scale(double s) {
  for (auto& w : d_weights)
    for (double& x : w) x *= s;
  for (auto& b : d_biases)
    for (double& x : b) x *= s;
}

void GradBundle::axpy(double s, const GradBundle& other) {
  const auto& k = kern::ops();
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    k.axpy(d_weights[l].data(), s, other.d_weights[l].data(), d_weights[l].size());
    k.axpy(d_biases[l].data(), s, other.d_biases[l].data(), d_biases[l].size());
  }
}

double GradBundle::max_abs() const {
  double m = 0.0;
  for (const auto& w : d_weights)
    for (double x : w) m = std::max(m, std::fabs(x));
  for (const auto& b : d_biases)
    for (double x : b) m = std::max(m, std::fabs(x));
  return m;
}

bool GradBundle::finite() const {
  for (const auto& w : d_weights)
    if (!all_finite(w)) return false;
  for (const auto& b : d_biases)
    if (!all_finite(b)) return false;
  return true;
}

void mlp_backward(const Mlp& net, const ForwardCache& cache,
                  std::span<const double> out_cot, GradBundle& grads,
                  double* input_cot) {
  const std::size_t L = net.layer_count();
  require(out_cot.size() == net.output_dim(), "mlp_backward: cotangent dimension mismatch");
  const auto& k = kern::ops();

  // delta starts on the (linear) output pre-activation.
  std::vector<double> delta(out_cot.begin(), out_cot.end());
  std::vector<double> tmp;
  for (std::size_t li = L; li-- > 0;) {
    const std::size_t rows = net.layer_sizes[li + 1];
    const std::size_t cols = net.layer_sizes[li];
    const double* below = li == 0 ? cache.input.data() : cache.act[li - 1].data();
    k.ger(grads.d_weights[li].data(), delta.data(), below, 1.0, rows, cols);
    k.axpy(grads.d_biases[li].data(), 1.0, delta.data(), rows);
    if (li == 0) {
      if (input_cot != nullptr) {
        k.matvec_t(net.weights[0].data(), delta.data(), input_cot, rows, cols);
      }
      break;
    }
    tmp.resize(cols);
    k.matvec_t(net.weights[li].data(), delta.data(), tmp.data(), rows, cols);
    for (std::size_t i = 0; i < cols; ++i) tmp[i] *= elu_prime(cache.pre[li - 1][i]);
    delta = tmp;
  }
}

void mlp_input_grad(const Mlp& net, const ForwardCache& cache,
                    std::span<const double> out_cot, double* input_cot) {
  const std::size_t L = net.layer_count();
  require(out_cot.size() == net.output_dim(), "mlp_input_grad: cotangent dimension mismatch");
  const auto& k = kern::ops();
  std::vector<double> delta(out_cot.begin(), out_cot.end());
  std::vector<double> tmp;
  for (std::size_t li = L; li-- > 0;) {
    const std::size_t rows = net.layer_sizes[li + 1];
    const std::size_t cols = net.layer_sizes[li];
    if (li == 0) {
      k.matvec_t(net.weights[0].data(), delta.data(), input_cot, rows, cols);
      return;
    }
    tmp.resize(cols);
    k.matvec_t(net.weights[li].data(), delta.data(), tmp.data(), rows, cols);
    for (std::size_t i = 0; i < cols; ++i) tmp[i] *= elu_prime(cache.pre[li - 1][i]);
    delta = tmp;
  }
}

GradBundle finite_diff_grad(const std::function<double()>& loss, Mlp& net, double h) {
  require(h > 0.0, "finite_diff_grad: h must be positive");
  GradBundle g = GradBundle::like(net);
  auto probe = [&](double& p) {
    const double saved = p;
    p = saved + h;
    const double up = loss();
    p = saved - h;
    const double down = loss();
    p = saved;
    return (up - down) / (2.0 * h);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
      g.d_weights[l][i] = probe(net.weights[l][i]);
    }
    for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
      g.d_biases[l][i] = probe(net.biases[l][i]);
    }
  }
  return g;
}

AdamState AdamState::like(const Mlp& net, LrSchedule schedule) {
  AdamState st;
  st.lr = schedule;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    st.m_w.emplace_back(net.weights[l].size(), 0.0);
    st.v_w.emplace_back(net.weights[l].size(), 0.0);
    st.m_b.emplace_back(net.biases[l].size(), 0.0);
    st.v_b.emplace_back(net.biases[l].size(), 0.0);
  }
  return st;
}

void adam_step(Mlp& net, const GradBundle& grads, AdamState& state) {
  if (!grads.finite()) throw TrainingError("adam_step: non-finite gradient");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double lr = state.lr.at(state.step_count);
  const double inv_bc1 = 1.0 / (1.0 - std::pow(state.beta1, t));
  const double inv_bc2 = 1.0 / (1.0 - std::pow(state.beta2, t));
  const auto& k = kern::ops();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    k.adam(net.weights[l].data(), state.m_w[l].data(), state.v_w[l].data(),
           grads.d_weights[l].data(), net.weights[l].size(), lr, state.beta1,
           state.beta2, inv_bc1, inv_bc2, state.eps);
    k.adam(net.biases[l].data(), state.m_b[l].data(), state.v_b[l].data(),
           grads.d_biases[l].data(), net.biases[l].size(), lr, state.beta1,
           state.beta2, inv_bc1, inv_bc2, state.eps);
  }
}

void ScalarAdam::step(double& param, double grad) {
  if (!std::isfinite(grad)) throw TrainingError("ScalarAdam: non-finite gradient");
  step_count += 1;
  const double t = static_cast<double>(step_count);
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(beta1, t));
  const double vhat = v / (1.0 - std::pow(beta2, t));
  param -= lr.at(step_count) * mhat / (std::sqrt(vhat) + eps);
}

void project_params(Mlp& net, double bound) {
  require(bound > 0.0, "project_params: bound must be positive");
  if (!std::isfinite(bound)) return;
  const auto& k = kern::ops();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    k.clamp(net.weights[l].data(), bound, net.weights[l].size());
    k.clamp(net.biases[l].data(), bound, net.biases[l].size());
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  require(target.layer_sizes == online.layer_sizes, "soft_update: shape mismatch");
  const auto& k = kern::ops();
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    k.lerp(target.weights[l].data(), online.weights[l].data(), tau,
           target.weights[l].size());
    k.lerp(target.biases[l].data(), online.biases[l].data(), tau,
           target.biases[l].size());
  }
}

}  // namespace ssac::nn
