#include <algorithm>
#include <cmath>

#include "ssac/common.hpp"
#include "ssac/learner.hpp"

namespace ssac::learner {
namespace {

// obs ++ action into ws.sa.
void join_sa(std::span<const double> obs, std::span<const double> action,
             std::vector<double>& sa) {
  sa.resize(obs.size() + action.size());
  std::copy(obs.begin(), obs.end(), sa.begin());
  std::copy(action.begin(), action.end(), sa.begin() + obs.size());
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingError(std::string(what) + ": non-finite loss");
}

}  // namespace

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Safety-index value of hazard h as seen in the observation; the input
// feature of the shared multiplier head.
double multiplier_feature(const Agent& ag, std::span<const double> obs, std::size_t h) {
  require(obs.size() >= 6 + 2 * ag.hazard_count, "multiplier feature: observation too short");
  return safety::phi(obs[6 + 2 * h], obs[6 + 2 * h + 1], ag.safety);
}

void multipliers(const Agent& ag, std::span<const double> obs, LossWorkspace& ws,
                 double* out) {
  for (std::size_t h = 0; h < ag.hazard_count; ++h) {
    const double feat = multiplier_feature(ag, obs, h);
    out[h] = softplus(nn::mlp_forward(ag.multiplier, {&feat, 1}, ws.mult)[0]);
  }
}

double q_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
              std::span<const double> eps_next, double gamma, LossWorkspace& ws,
              nn::GradBundle& g1, nn::GradBundle& g2) {
  require(!idx.empty(), "q_loss: empty batch");
  require(eps_next.size() == idx.size() * ag.act_dim, "q_loss: noise size mismatch");
  g1.zero();
  g2.zero();
  const double alpha = ag.alpha();
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double loss = 0.0;
  double cot[1];
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const TransitionView t = buf.view(idx[j]);
    // Bellman target from the target critics and a fresh next-state action;
    // constant with respect to the online critic parameters.
    policy_forward(ag.policy, t.next_obs, eps_next.subspan(j * ag.act_dim, ag.act_dim),
                   ws.pol);
    join_sa(t.next_obs, {ws.pol.action.data(), ag.act_dim}, ws.sa);
    const double q1t = nn::mlp_forward(ag.q1_target, ws.sa, ws.t1)[0];
    const double q2t = nn::mlp_forward(ag.q2_target, ws.sa, ws.t2)[0];
    const double soft_value = std::min(q1t, q2t) - alpha * ws.pol.log_prob;
    const double y = t.reward + gamma * (t.done ? 0.0 : 1.0) * soft_value;

    join_sa(t.obs, t.action, ws.sa);
    const double q1v = nn::mlp_forward(ag.q1, ws.sa, ws.q1)[0];
    const double q2v = nn::mlp_forward(ag.q2, ws.sa, ws.q2)[0];
    loss += 0.5 * ((q1v - y) * (q1v - y) + (q2v - y) * (q2v - y));
    cot[0] = (q1v - y) * inv_n;
    nn::mlp_backward(ag.q1, ws.q1, {cot, 1}, g1);
    cot[0] = (q2v - y) * inv_n;
    nn::mlp_backward(ag.q2, ws.q2, {cot, 1}, g2);
  }
  loss *= inv_n;
  check_finite(loss, "q_loss");
  return loss;
}

double qc_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
               LossWorkspace& ws, nn::GradBundle& gc) {
  require(!idx.empty(), "qc_loss: empty batch");
  gc.zero();
  const double inv = 1.0 / (static_cast<double>(idx.size()) *
                            static_cast<double>(ag.hazard_count));
  double loss = 0.0;
  ws.out_cot.resize(ag.hazard_count);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const TransitionView t = buf.view(idx[j]);
    join_sa(t.obs, t.action, ws.sa);
    const auto pred = nn::mlp_forward(ag.qc, ws.sa, ws.qc);
    for (std::size_t h = 0; h < ag.hazard_count; ++h) {
      const double diff = pred[h] - t.cost[h];
      loss += 0.5 * diff * diff;
      ws.out_cot[h] = diff * inv;
    }
    nn::mlp_backward(ag.qc, ws.qc, ws.out_cot, gc);
  }
  loss *= inv;
  check_finite(loss, "qc_loss");
  return loss;
}

double policy_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
                   std::span<const double> eps, bool constrained, LossWorkspace& ws,
                   nn::GradBundle& gpol) {
  require(!idx.empty(), "policy_loss: empty batch");
  require(eps.size() == idx.size() * ag.act_dim, "policy_loss: noise size mismatch");
  gpol.zero();
  const double alpha = ag.alpha();
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  const std::size_t sa_dim = ag.obs_dim + ag.act_dim;
  double loss = 0.0;
  double cot[1];
  double d_action[env::kActionDim];
  ws.input_cot.resize(sa_dim);
  ws.lam.resize(ag.hazard_count);
  ws.out_cot.resize(std::max<std::size_t>(ag.hazard_count, 1));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const TransitionView t = buf.view(idx[j]);
    policy_forward(ag.policy, t.obs, eps.subspan(j * ag.act_dim, ag.act_dim), ws.pol);
    join_sa(t.obs, {ws.pol.action.data(), ag.act_dim}, ws.sa);
    const double q1v = nn::mlp_forward(ag.q1, ws.sa, ws.q1)[0];
    const double q2v = nn::mlp_forward(ag.q2, ws.sa, ws.q2)[0];
    const bool use_q1 = q1v <= q2v;
    double sample_loss = alpha * ws.pol.log_prob - std::min(q1v, q2v);

    // d(sample_loss)/d(action): -dQmin/da, plus the weighted safety-critic
    // term when constrained. Gradients stop at Lambda and alpha.
    cot[0] = -1.0;
    nn::mlp_input_grad(use_q1 ? ag.q1 : ag.q2, use_q1 ? ws.q1 : ws.q2, {cot, 1},
                       ws.input_cot.data());
    for (std::size_t i = 0; i < ag.act_dim; ++i) d_action[i] = ws.input_cot[ag.obs_dim + i];

    if (constrained) {
      multipliers(ag, t.obs, ws, ws.lam.data());
      const auto qcv = nn::mlp_forward(ag.qc, ws.sa, ws.qc);
      for (std::size_t h = 0; h < ag.hazard_count; ++h) {
        sample_loss += ws.lam[h] * qcv[h];
        ws.out_cot[h] = ws.lam[h];
      }
      nn::mlp_input_grad(ag.qc, ws.qc, {ws.out_cot.data(), ag.hazard_count},
                         ws.input_cot.data());
      for (std::size_t i = 0; i < ag.act_dim; ++i) d_action[i] += ws.input_cot[ag.obs_dim + i];
    }

    loss += sample_loss;
    for (std::size_t i = 0; i < ag.act_dim; ++i) d_action[i] *= inv_n;
    policy_backward(ag.policy, ws.pol, d_action, alpha * inv_n, gpol);
  }
  loss *= inv_n;
  check_finite(loss, "policy_loss");
  return loss;
}

double multiplier_objective(const Agent& ag, const ReplayBuffer& buf,
                            std::span<const std::uint32_t> idx, std::span<const double> eps,
                            LossWorkspace& ws, nn::GradBundle& gmult) {
  require(!idx.empty(), "multiplier_objective: empty batch");
  require(eps.size() == idx.size() * ag.act_dim, "multiplier_objective: noise size mismatch");
  gmult.zero();
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double objective = 0.0;
  double cot[1];
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const TransitionView t = buf.view(idx[j]);
    policy_forward(ag.policy, t.obs, eps.subspan(j * ag.act_dim, ag.act_dim), ws.pol);
    join_sa(t.obs, {ws.pol.action.data(), ag.act_dim}, ws.sa);
    const auto qcv = nn::mlp_forward(ag.qc, ws.sa, ws.qc);
    for (std::size_t h = 0; h < ag.hazard_count; ++h) {
      const double feat = multiplier_feature(ag, t.obs, h);
      const double raw = nn::mlp_forward(ag.multiplier, {&feat, 1}, ws.mult)[0];
      objective += softplus(raw) * qcv[h];
      cot[0] = qcv[h] * sigmoid(raw) * inv_n;
      nn::mlp_backward(ag.multiplier, ws.mult, {cot, 1}, gmult);
    }
  }
  objective *= inv_n;
  check_finite(objective, "multiplier_objective");
  return objective;
}

double alpha_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
                  std::span<const double> eps, double target_entropy, LossWorkspace& ws,
                  double& grad_log_alpha) {
  require(!idx.empty(), "alpha_loss: empty batch");
  require(eps.size() == idx.size() * ag.act_dim, "alpha_loss: noise size mismatch");
  double mean_term = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const TransitionView t = buf.view(idx[j]);
    policy_forward(ag.policy, t.obs, eps.subspan(j * ag.act_dim, ag.act_dim), ws.pol);
    mean_term += ws.pol.log_prob + target_entropy;
  }
  mean_term /= static_cast<double>(idx.size());
  const double loss = -ag.alpha() * mean_term;
  check_finite(loss, "alpha_loss");
  grad_log_alpha = loss;  // d/d(log alpha) of -exp(log alpha)*mean_term
  return loss;
}

}  // namespace ssac::learner
