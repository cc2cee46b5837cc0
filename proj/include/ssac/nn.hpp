#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Minimal dense-network engine: ELU MLPs with explicit parameters, exact
// reverse-mode gradients, Adam with linear learning-rate annealing, parameter
// projection onto a box, Polyak averaging, and a central-finite-difference
// gradient oracle used by the test suites.

namespace ssac::nn {

inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline double elu_prime(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

// Feed-forward net: hidden layers ELU, output layer linear. weights[l] is
// row-major with shape layer_sizes[l+1] x layer_sizes[l].
struct Mlp {
  std::vector<std::size_t> layer_sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }
  std::size_t param_count() const;
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
// deterministic in the seed. Throws ConfigError on fewer than two layers or
// a non-positive size.
Mlp mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

// Intermediate values of one forward pass, kept for the backward pass.
// pre[l] holds the affine output of layer l; act[l] (hidden layers only)
// holds elu(pre[l]). The network output is pre.back().
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

// Returns a view of the output, owned by the cache.
std::span<const double> mlp_forward(const Mlp& net, std::span<const double> input,
                                    ForwardCache& cache);
std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

// Per-parameter gradient (or direction) arrays, shape-matched to an Mlp.
struct GradBundle {
  std::vector<std::vector<double>> d_weights;
  std::vector<std::vector<double>> d_biases;

  static GradBundle like(const Mlp& net);
  void zero();
  void scale(double s);
  // this += s * other
  void axpy(double s, const GradBundle& other);
  double max_abs() const;
  bool finite() const;
};

// Accumulates exact gradients of <out_cot, net(input)> into `grads` (caller
// zeroes when accumulation is not wanted). If input_cot is non-null it
// receives d/d(input), length input_dim, overwritten.
void mlp_backward(const Mlp& net, const ForwardCache& cache,
                  std::span<const double> out_cot, GradBundle& grads,
                  double* input_cot = nullptr);

// Backward pass that produces only the input cotangent (no parameter
// gradients) — used where a network appears as a frozen function of its
// input, e.g. differentiating a critic with respect to the action.
void mlp_input_grad(const Mlp& net, const ForwardCache& cache,
                    std::span<const double> out_cot, double* input_cot);

// Central differences (L(p+h) - L(p-h)) / 2h for every scalar parameter.
// `loss` must be pure given the network parameters (freeze any sampling
// noise before calling). The net is restored exactly on return.
GradBundle finite_diff_grad(const std::function<double()>& loss, Mlp& net, double h);

// Linear annealing from `start` at step 1 to `end` at step `horizon`;
// constant afterwards. horizon == 0 disables annealing.
struct LrSchedule {
  double start = 1e-3;
  double end = 1e-3;
  std::uint64_t horizon = 0;

  double at(std::uint64_t step) const {
    if (horizon == 0 || step >= horizon) return horizon == 0 ? start : end;
    return start + (end - start) * (static_cast<double>(step) /
                                    static_cast<double>(horizon));
  }
};

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule lr;

  static AdamState like(const Mlp& net, LrSchedule schedule);
};

// One Adam update (bias-corrected, lr from the schedule at the incremented
// step count). Throws TrainingError on non-finite gradients.
void adam_step(Mlp& net, const GradBundle& grads, AdamState& state);

// Scalar twin of AdamState for the temperature parameter.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule lr;

  void step(double& param, double grad);
};

// Clamp every parameter into [-bound, +bound].
void project_params(Mlp& net, double bound);

// target := tau * online + (1 - tau) * target, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

}  // namespace ssac::nn
