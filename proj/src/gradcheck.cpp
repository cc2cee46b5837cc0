#include "ssac/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "ssac/env.hpp"
#include "ssac/learner.hpp"
#include "ssac/nn.hpp"
#include "ssac/rng.hpp"
#include "ssac/safety.hpp"

namespace ssac::gradcheck {
namespace {

double rel_err(double ga, double gfd) {
  const double denom = std::max({std::abs(ga), std::abs(gfd), kRelFloor});
  return std::abs(ga - gfd) / denom;
}

// Max relative error between an analytic bundle and an FD bundle.
void compare(const nn::GradBundle& ga, const nn::GradBundle& gfd, LossCheck& out) {
  for (std::size_t l = 0; l < ga.d_weights.size(); ++l) {
    for (std::size_t i = 0; i < ga.d_weights[l].size(); ++i) {
      out.max_rel_err = std::max(out.max_rel_err, rel_err(ga.d_weights[l][i], gfd.d_weights[l][i]));
      out.max_abs_grad = std::max(out.max_abs_grad, std::abs(ga.d_weights[l][i]));
      ++out.params;
    }
    for (std::size_t i = 0; i < ga.d_biases[l].size(); ++i) {
      out.max_rel_err = std::max(out.max_rel_err, rel_err(ga.d_biases[l][i], gfd.d_biases[l][i]));
      out.max_abs_grad = std::max(out.max_abs_grad, std::abs(ga.d_biases[l][i]));
      ++out.params;
    }
  }
}

}  // namespace

Report run(std::uint64_t seed, std::size_t batch, std::size_t hidden) {
  using namespace learner;

  env::EnvConfig ecfg;  // defaults: one hazard, obs_dim 8
  safety::SafetyIndexParams sp;
  LearnerConfig lc;
  lc.hidden_units = hidden;
  lc.hidden_layers = 2;
  lc.batch = batch;

  Report rep;
  rep.seed = seed;

  // Real transitions from a random policy so inputs have realistic scale and
  // the cost channel is the observed safety-index transition cost.
  const std::size_t odim = env::obs_dim(ecfg);
  const std::size_t H = ecfg.hazard_count();
  ReplayBuffer buf(4096, odim, H);
  Rng env_rng(splitmix64(seed ^ 0x67726164636b6531ull));
  auto [st, obs] = env::reset(ecfg, env_rng);
  Transition tr;
  tr.cost.resize(H);
  tr.phi.resize(H);
  for (int i = 0; i < 256; ++i) {
    tr.obs = obs;
    for (std::size_t a = 0; a < env::kActionDim; ++a) {
      tr.action[a] = env_rng.uniform(-1.0, 1.0);
    }
    auto [ns, res] = env::step(st, tr.action, ecfg);
    for (std::size_t h = 0; h < H; ++h) {
      const double phi_s = safety::phi(res.before[h].d, res.before[h].d_dot, sp);
      const double phi_n = safety::phi(res.after[h].d, res.after[h].d_dot, sp);
      tr.phi[h] = phi_s;
      tr.cost[h] = safety::transition_cost(phi_s, phi_n, sp.eta);
    }
    tr.reward = res.reward;
    tr.next_obs = res.next_observation;
    tr.done = res.done;
    buf.push(tr);
    if (res.done) {
      std::tie(st, obs) = env::reset(ecfg, env_rng);
    } else {
      st = ns;
      obs = res.next_observation;
    }
  }

  Agent ag = make_agent(lc, sp, odim, H, splitmix64(seed ^ 0x67726164636b6532ull));
  // Non-trivial temperature and optimizer-free parameters.
  ag.log_alpha = -0.7;

  Rng noise(splitmix64(seed ^ 0x67726164636b6533ull));
  std::vector<std::uint32_t> idx;
  buf.sample_indices(batch, noise, idx);
  std::vector<double> eps_a(batch * env::kActionDim), eps_b(batch * env::kActionDim);
  for (auto& e : eps_a) e = noise.normal();
  for (auto& e : eps_b) e = noise.normal();

  LossWorkspace ws;
  const double h = kFdStep;

  // --- critics --------------------------------------------------------------
  {
    nn::GradBundle g1 = nn::GradBundle::like(ag.q1);
    nn::GradBundle g2 = nn::GradBundle::like(ag.q2);
    g1.zero();
    g2.zero();
    q_loss(ag, buf, idx, eps_a, lc.gamma, ws, g1, g2);
    auto loss = [&] {
      nn::GradBundle t1 = nn::GradBundle::like(ag.q1);
      nn::GradBundle t2 = nn::GradBundle::like(ag.q2);
      t1.zero();
      t2.zero();
      return q_loss(ag, buf, idx, eps_a, lc.gamma, ws, t1, t2);
    };
    LossCheck c1{"q1", 0.0, 0.0, 0};
    compare(g1, nn::finite_diff_grad(loss, ag.q1, h), c1);
    rep.checks.push_back(c1);
    LossCheck c2{"q2", 0.0, 0.0, 0};
    compare(g2, nn::finite_diff_grad(loss, ag.q2, h), c2);
    rep.checks.push_back(c2);
  }
  {
    nn::GradBundle gc = nn::GradBundle::like(ag.qc);
    gc.zero();
    qc_loss(ag, buf, idx, ws, gc);
    auto loss = [&] {
      nn::GradBundle t = nn::GradBundle::like(ag.qc);
      t.zero();
      return qc_loss(ag, buf, idx, ws, t);
    };
    LossCheck c{"qc", 0.0, 0.0, 0};
    compare(gc, nn::finite_diff_grad(loss, ag.qc, h), c);
    rep.checks.push_back(c);
  }

  // --- policy ----------------------------------------------------------------
  {
    nn::GradBundle gp = nn::GradBundle::like(ag.policy.trunk);
    gp.zero();
    policy_loss(ag, buf, idx, eps_a, /*constrained=*/true, ws, gp);
    auto loss = [&] {
      nn::GradBundle t = nn::GradBundle::like(ag.policy.trunk);
      t.zero();
      return policy_loss(ag, buf, idx, eps_a, true, ws, t);
    };
    LossCheck c{"policy", 0.0, 0.0, 0};
    compare(gp, nn::finite_diff_grad(loss, ag.policy.trunk, h), c);
    rep.checks.push_back(c);
  }

  // --- multiplier -------------------------------------------------------------
  {
    nn::GradBundle gm = nn::GradBundle::like(ag.multiplier);
    gm.zero();
    multiplier_objective(ag, buf, idx, eps_b, ws, gm);
    auto loss = [&] {
      nn::GradBundle t = nn::GradBundle::like(ag.multiplier);
      t.zero();
      return multiplier_objective(ag, buf, idx, eps_b, ws, t);
    };
    LossCheck c{"multiplier", 0.0, 0.0, 0};
    compare(gm, nn::finite_diff_grad(loss, ag.multiplier, h), c);
    rep.checks.push_back(c);
  }

  // --- temperature (scalar parameter, FD on log_alpha directly) ---------------
  {
    double ga = 0.0;
    alpha_loss(ag, buf, idx, eps_a, lc.target_entropy, ws, ga);
    const double saved = ag.log_alpha;
    double dummy = 0.0;
    ag.log_alpha = saved + h;
    const double lp = alpha_loss(ag, buf, idx, eps_a, lc.target_entropy, ws, dummy);
    ag.log_alpha = saved - h;
    const double lm = alpha_loss(ag, buf, idx, eps_a, lc.target_entropy, ws, dummy);
    ag.log_alpha = saved;
    const double gfd = (lp - lm) / (2.0 * h);
    LossCheck c{"alpha", rel_err(ga, gfd), std::abs(ga), 1};
    rep.checks.push_back(c);
  }

  for (const auto& c : rep.checks) {
    rep.worst_rel_err = std::max(rep.worst_rel_err, c.max_rel_err);
  }
  return rep;
}

}  // namespace ssac::gradcheck
