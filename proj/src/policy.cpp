#include <cmath>

#include "ssac/common.hpp"
#include "ssac/learner.hpp"

namespace ssac::learner {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;  // 0.5*log(2*pi)

}  // namespace

void policy_forward(const PolicyNet& pol, std::span<const double> obs,
                    std::span<const double> eps, PolicyEval& ev) {
  require(eps.size() == pol.act_dim, "policy_forward: noise dimension mismatch");
  const auto out = nn::mlp_forward(pol.trunk, obs, ev.cache);
  require(out.size() == 2 * pol.act_dim, "policy_forward: trunk must emit mu and log_std");
  if (!all_finite(out)) throw TrainingError("policy_forward: non-finite trunk output");
  ev.log_prob = 0.0;
  for (std::size_t i = 0; i < pol.act_dim; ++i) {
    ev.mu[i] = out[i];
    const double raw = out[pol.act_dim + i];
    ev.log_std_clamped[i] = raw < kLogStdMin || raw > kLogStdMax;
    ev.log_std[i] = std::clamp(raw, kLogStdMin, kLogStdMax);
    ev.std_dev[i] = std::exp(ev.log_std[i]);
    ev.eps[i] = eps[i];
    ev.u[i] = ev.mu[i] + ev.std_dev[i] * eps[i];
    ev.action[i] = std::tanh(ev.u[i]);
    const double sech2 = 1.0 - ev.action[i] * ev.action[i];
    ev.log_prob += -0.5 * eps[i] * eps[i] - ev.log_std[i] - kHalfLog2Pi -
                   std::log(sech2 + kSquashEps);
  }
}

void sample_action(const PolicyNet& pol, std::span<const double> obs, Rng& rng,
                   PolicyEval& ev) {
  double eps[env::kActionDim];
  for (std::size_t i = 0; i < pol.act_dim; ++i) eps[i] = rng.normal();
  policy_forward(pol, obs, {eps, pol.act_dim}, ev);
}

std::array<double, env::kActionDim> deterministic_action(const PolicyNet& pol,
                                                         std::span<const double> obs) {
  static thread_local PolicyEval ev;
  const double zeros[env::kActionDim] = {0.0, 0.0};
  policy_forward(pol, obs, {zeros, pol.act_dim}, ev);
  std::array<double, env::kActionDim> a{};
  for (std::size_t i = 0; i < pol.act_dim; ++i) a[i] = std::tanh(ev.mu[i]);
  return a;
}

void policy_backward(const PolicyNet& pol, const PolicyEval& ev, const double* d_action,
                     double d_logp, nn::GradBundle& grads) {
  // Trunk output layout: [mu..., log_std...]. With T = tanh(u) and
  // S = 1 - T^2:
  //   d(action)/du = S
  //   d(log_prob)/du = 2*T*S / (S + kSquashEps)   (from -log(S + eps))
  //   d(log_prob)/d(log_std) = -1 + d(log_prob)/du * std*eps
  //   du/d(mu) = 1, du/d(log_std) = std*eps
  double out_cot[2 * env::kActionDim];
  for (std::size_t i = 0; i < pol.act_dim; ++i) {
    const double T = ev.action[i];
    const double S = 1.0 - T * T;
    const double dlogp_du = 2.0 * T * S / (S + kSquashEps);
    double du = d_logp * dlogp_du;
    if (d_action != nullptr) du += d_action[i] * S;
    out_cot[i] = du;
    out_cot[pol.act_dim + i] =
        ev.log_std_clamped[i] ? 0.0 : du * ev.std_dev[i] * ev.eps[i] - d_logp;
  }
  nn::mlp_backward(pol.trunk, ev.cache, {out_cot, 2 * pol.act_dim}, grads);
}

}  // namespace ssac::learner
