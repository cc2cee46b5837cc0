#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <utility>

#include "ssac/common.hpp"
#include "ssac/learner.hpp"

namespace ssac::learner {
namespace {

void fill_normal(Rng& rng, std::vector<double>& v) {
  for (double& x : v) x = rng.normal();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) /
                               static_cast<double>(v.size());
}

// Position uniform over the arena, velocity uniform over the speed disk,
// rejected until the state lies in the safe subset.
env::EnvState sample_safe_subset_state(const env::EnvConfig& ecfg,
                                       const safety::SafetyIndexParams& sp, Rng& rng) {
  const double L = ecfg.arena_half_width;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    env::EnvState s;
    s.px = rng.uniform(-L, L);
    s.py = rng.uniform(-L, L);
    double vx, vy;
    do {
      vx = rng.uniform(-ecfg.v_max, ecfg.v_max);
      vy = rng.uniform(-ecfg.v_max, ecfg.v_max);
    } while (vx * vx + vy * vy > ecfg.v_max * ecfg.v_max);
    s.vx = vx;
    s.vy = vy;
    if (safety::in_safe_subset(s, ecfg, sp)) return s;
  }
  throw ConfigError("sample_safe_subset_state: safe subset appears empty");
}

}  // namespace

void LearnerConfig::validate() const {
  require(gamma >= 0.0 && gamma < 1.0, "learner: gamma must be in [0,1)");
  require(tau > 0.0 && tau <= 1.0, "learner: tau must be in (0,1]");
  require(m_pi >= 1, "learner: m_pi must be >= 1");
  require(m_lambda >= 1, "learner: m_lambda must be >= 1");
  require(batch >= 1, "learner: batch must be >= 1");
  require(buffer_capacity >= batch, "learner: buffer capacity must be >= batch");
  for (double lr : {actor_lr_start, actor_lr_end, critic_lr_start, critic_lr_end,
                    multiplier_lr_start, multiplier_lr_end, alpha_lr_start, alpha_lr_end}) {
    require(lr > 0.0, "learner: learning rates must be positive");
  }
  require(hidden_units >= 1 && hidden_layers >= 1, "learner: hidden layout must be >= 1");
  require(env_steps_per_iteration >= 1, "learner: env_steps_per_iteration must be >= 1");
  require(iterations >= 1, "learner: iterations must be >= 1");
  require(projection_bound > 0.0, "learner: projection_bound must be positive");
  require(init_alpha > 0.0, "learner: init_alpha must be positive");
}

TrainRngs TrainRngs::from_seed(std::uint64_t seed) {
  TrainRngs r;
  std::uint64_t x = seed;
  auto next = [&x] { return x = splitmix64(x); };
  r.env = Rng(next());
  r.action = Rng(next());
  r.sample = Rng(next());
  r.q_noise = Rng(next());
  r.pol_noise = Rng(next());
  r.mult_noise = Rng(next());
  r.alpha_noise = Rng(next());
  return r;
}

Agent make_agent(const LearnerConfig& cfg, const safety::SafetyIndexParams& sp,
                 std::size_t obs_dim, std::size_t hazard_count, std::uint64_t seed) {
  cfg.validate();
  sp.validate();
  require(obs_dim >= 1, "make_agent: obs_dim must be >= 1");
  require(hazard_count >= 1, "make_agent: need at least one hazard/constraint");

  Agent ag;
  ag.obs_dim = obs_dim;
  ag.hazard_count = hazard_count;
  ag.safety = sp;

  auto sizes = [&](std::size_t in, std::size_t out) {
    std::vector<std::size_t> s{in};
    s.insert(s.end(), cfg.hidden_layers, cfg.hidden_units);
    s.push_back(out);
    return s;
  };
  // Independent init streams per network, all derived from the master seed.
  std::uint64_t x = splitmix64(seed ^ 0x5353414341474e54ull);  // agent-init domain tag
  auto next = [&x] { return x = splitmix64(x); };
  ag.policy.trunk = nn::mlp_init(sizes(obs_dim, 2 * ag.act_dim), next());
  ag.q1 = nn::mlp_init(sizes(obs_dim + ag.act_dim, 1), next());
  ag.q2 = nn::mlp_init(sizes(obs_dim + ag.act_dim, 1), next());
  ag.q1_target = ag.q1;
  ag.q2_target = ag.q2;
  ag.qc = nn::mlp_init(sizes(obs_dim + ag.act_dim, hazard_count), next());
  ag.multiplier = nn::mlp_init(sizes(kMultiplierInputDim, 1), next());
  ag.multiplier.biases.back()[0] = kMultiplierRawInit;
  ag.log_alpha = std::log(cfg.init_alpha);

  const std::uint64_t H =
      cfg.anneal_horizon != 0 ? cfg.anneal_horizon : cfg.total_grad_steps();
  auto sched = [](double s, double e, std::uint64_t h) {
    return nn::LrSchedule{s, e, std::max<std::uint64_t>(h, 1)};
  };
  // Delayed nets update less often; their schedules span the same wall-clock
  // run, i.e. horizon counted in their own update steps.
  ag.opt_policy = nn::AdamState::like(
      ag.policy.trunk, sched(cfg.actor_lr_start, cfg.actor_lr_end,
                             H / static_cast<std::uint64_t>(cfg.m_pi)));
  ag.opt_q1 = nn::AdamState::like(ag.q1, sched(cfg.critic_lr_start, cfg.critic_lr_end, H));
  ag.opt_q2 = nn::AdamState::like(ag.q2, sched(cfg.critic_lr_start, cfg.critic_lr_end, H));
  ag.opt_qc = nn::AdamState::like(ag.qc, sched(cfg.critic_lr_start, cfg.critic_lr_end, H));
  ag.opt_mult = nn::AdamState::like(
      ag.multiplier, sched(cfg.multiplier_lr_start, cfg.multiplier_lr_end,
                           H / static_cast<std::uint64_t>(cfg.m_lambda)));
  ag.opt_alpha.lr = sched(cfg.alpha_lr_start, cfg.alpha_lr_end,
                          H / static_cast<std::uint64_t>(cfg.m_pi));
  return ag;
}

namespace {

void run_training(Agent& ag, const env::EnvConfig& ecfg, const safety::SafetyIndexParams& sp,
                  const LearnerConfig& lc, TrainRngs& R, const TrainHooks& hooks) {
  ReplayBuffer buf(lc.buffer_capacity, ag.obs_dim, ag.hazard_count);
  LossWorkspace ws;
  nn::GradBundle g1 = nn::GradBundle::like(ag.q1);
  nn::GradBundle g2 = nn::GradBundle::like(ag.q2);
  nn::GradBundle gc = nn::GradBundle::like(ag.qc);
  nn::GradBundle gpol = nn::GradBundle::like(ag.policy.trunk);
  nn::GradBundle gmult = nn::GradBundle::like(ag.multiplier);
  std::vector<std::uint32_t> idx;
  const std::size_t noise_len = lc.batch * ag.act_dim;
  std::vector<double> eps_q(noise_len), eps_pol(noise_len), eps_mult(noise_len),
      eps_alpha(noise_len);
  std::vector<double> lam(ag.hazard_count);
  PolicyEval act_ev;

  Transition tr;
  tr.cost.resize(ag.hazard_count);
  tr.phi.resize(ag.hazard_count);

  auto [state, obs] = env::reset(ecfg, R.env);
  double ep_return = 0.0;
  std::size_t ep_viol = 0;
  double last_mean_return = 0.0, last_mean_ep_cost = 0.0;
  std::size_t cumulative_violations = 0;
  std::vector<double> returns, ep_costs;

  for (std::size_t iter = 1; iter <= lc.iterations; ++iter) {
    returns.clear();
    ep_costs.clear();
    std::size_t viol_iter = 0;
    double mult_sum = 0.0, mult_max = 0.0;
    std::size_t mult_n = 0;
    double ql_sum = 0.0, qcl_sum = 0.0, pl_sum = 0.0;
    std::size_t ql_n = 0, qcl_n = 0, pl_n = 0;

    for (std::size_t t = 0; t < lc.env_steps_per_iteration; ++t) {
      std::array<double, env::kActionDim> a{};
      if (ag.env_steps < lc.warmup_env_steps) {
        for (double& ai : a) ai = R.action.uniform(-1.0, 1.0);
      } else {
        sample_action(ag.policy, obs, R.action, act_ev);
        a = act_ev.action;
      }
      auto [next_state, res] = env::step(state, {a.data(), a.size()}, ecfg);

      bool violated = false;
      for (std::size_t h = 0; h < ag.hazard_count; ++h) {
        const double phi_s = safety::phi(res.before[h].d, res.before[h].d_dot, sp);
        const double phi_n = safety::phi(res.after[h].d, res.after[h].d_dot, sp);
        tr.phi[h] = phi_s;
        tr.cost[h] = safety::transition_cost(phi_s, phi_n, sp.eta);
        if (safety::phi0(res.after[h].d, sp) > 0.0) violated = true;
      }
      tr.obs = obs;
      tr.action = a;
      tr.reward = res.reward;
      tr.next_obs = res.next_observation;
      tr.done = res.done;
      buf.push(tr);

      if (lc.constrained) {
        multipliers(ag, obs, ws, lam.data());
        for (double l : lam) {
          mult_sum += l;
          mult_max = std::max(mult_max, l);
          ++mult_n;
        }
      }

      if (violated) {
        ++viol_iter;
        ++ep_viol;
      }
      ep_return += res.reward;
      ++ag.env_steps;

      if (res.done) {
        returns.push_back(ep_return);
        ep_costs.push_back(static_cast<double>(ep_viol));
        ep_return = 0.0;
        ep_viol = 0;
        std::tie(state, obs) = env::reset(ecfg, R.env);
      } else {
        state = next_state;
        obs = std::move(res.next_observation);
      }
    }

    if (ag.env_steps >= lc.warmup_env_steps && buf.size() >= lc.batch) {
      for (std::size_t g = 0; g < lc.grad_steps_per_iteration; ++g) {
        ++ag.grad_steps;
        buf.sample_indices(lc.batch, R.sample, idx);

        fill_normal(R.q_noise, eps_q);
        ql_sum += q_loss(ag, buf, idx, eps_q, lc.gamma, ws, g1, g2);
        ++ql_n;
        nn::adam_step(ag.q1, g1, ag.opt_q1);
        nn::adam_step(ag.q2, g2, ag.opt_q2);

        if (lc.constrained) {
          qcl_sum += qc_loss(ag, buf, idx, ws, gc);
          ++qcl_n;
          nn::adam_step(ag.qc, gc, ag.opt_qc);
        }

        if (ag.grad_steps % static_cast<std::uint64_t>(lc.m_pi) == 0) {
          fill_normal(R.pol_noise, eps_pol);
          pl_sum += policy_loss(ag, buf, idx, eps_pol, lc.constrained, ws, gpol);
          ++pl_n;
          nn::adam_step(ag.policy.trunk, gpol, ag.opt_policy);

          fill_normal(R.alpha_noise, eps_alpha);
          double grad_log_alpha = 0.0;
          alpha_loss(ag, buf, idx, eps_alpha, lc.target_entropy, ws, grad_log_alpha);
          ag.opt_alpha.step(ag.log_alpha, grad_log_alpha);
        }

        if (lc.constrained &&
            ag.grad_steps % static_cast<std::uint64_t>(lc.m_lambda) == 0) {
          fill_normal(R.mult_noise, eps_mult);
          multiplier_objective(ag, buf, idx, eps_mult, ws, gmult);
          gmult.scale(-1.0);  // ascent step through a descent optimizer
          nn::adam_step(ag.multiplier, gmult, ag.opt_mult);
        }

        nn::project_params(ag.policy.trunk, lc.projection_bound);
        nn::project_params(ag.q1, lc.projection_bound);
        nn::project_params(ag.q2, lc.projection_bound);
        if (lc.constrained) {
          nn::project_params(ag.qc, lc.projection_bound);
          nn::project_params(ag.multiplier, lc.projection_bound);
        }

        nn::soft_update(ag.q1_target, ag.q1, lc.tau);
        nn::soft_update(ag.q2_target, ag.q2, lc.tau);
      }
    }

    MetricsRow row;
    row.iteration = iter;
    row.env_steps = ag.env_steps;
    if (!returns.empty()) {
      last_mean_return = mean_of(returns);
      last_mean_ep_cost = mean_of(ep_costs);
    }
    row.mean_return = last_mean_return;
    row.mean_episode_cost = last_mean_ep_cost;
    row.violation_steps = viol_iter;
    cumulative_violations += viol_iter;
    row.cost_rate = ag.env_steps == 0
                        ? 0.0
                        : static_cast<double>(cumulative_violations) /
                              static_cast<double>(ag.env_steps);
    row.cumulative_cost = static_cast<double>(cumulative_violations);
    row.mean_multiplier = mult_n == 0 ? 0.0 : mult_sum / static_cast<double>(mult_n);
    row.max_multiplier = mult_max;
    row.alpha = ag.alpha();
    row.q_loss = ql_n == 0 ? 0.0 : ql_sum / static_cast<double>(ql_n);
    row.qc_loss = qcl_n == 0 ? 0.0 : qcl_sum / static_cast<double>(qcl_n);
    row.policy_loss = pl_n == 0 ? 0.0 : pl_sum / static_cast<double>(pl_n);
    if (hooks.on_metrics) hooks.on_metrics(row);
    if (hooks.on_iteration) hooks.on_iteration(iter, ag);
  }
}

}  // namespace

Agent train(const env::EnvConfig& ecfg, const safety::SafetyIndexParams& sp,
            const LearnerConfig& lc, std::uint64_t seed, const TrainHooks& hooks,
            TrainRngs* rngs_io) {
  ecfg.validate();
  sp.validate();
  lc.validate();
  TrainRngs own = TrainRngs::from_seed(seed);
  TrainRngs& R = rngs_io != nullptr ? *rngs_io : own;
  Agent ag = make_agent(lc, sp, env::obs_dim(ecfg), ecfg.hazard_count(), seed);
  try {
    run_training(ag, ecfg, sp, lc, R, hooks);
  } catch (const TrainingError& e) {
    if (hooks.on_diagnostic) hooks.on_diagnostic(ag, e.what());
    throw;
  }
  return ag;
}

EvalReport evaluate(const Agent& ag, const env::EnvConfig& ecfg,
                    const safety::SafetyIndexParams& sp, std::size_t episodes,
                    bool deterministic, std::uint64_t seed,
                    std::vector<std::vector<ProbeRow>>* probes) {
  ecfg.validate();
  sp.validate();
  require(env::obs_dim(ecfg) == ag.obs_dim && ecfg.hazard_count() == ag.hazard_count,
          "evaluate: environment does not match the agent's layout");
  Rng reset_rng(splitmix64(seed ^ 0x4556414c5253544dull));
  Rng act_rng(splitmix64(seed ^ 0x4556414c41435447ull));
  EvalReport rep;
  rep.episodes = episodes;
  double total_return = 0.0;
  std::size_t total_cost = 0;
  PolicyEval ev;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto [state, obs] = env::reset(ecfg, reset_rng);
    std::vector<ProbeRow>* probe = nullptr;
    if (probes != nullptr) probe = &probes->emplace_back();
    double ep_return = 0.0;
    bool done = false;
    int step_idx = 0;
    while (!done) {
      std::array<double, env::kActionDim> a{};
      if (deterministic) {
        a = deterministic_action(ag.policy, obs);
      } else {
        sample_action(ag.policy, obs, act_rng, ev);
        a = ev.action;
      }
      auto [next_state, res] = env::step(state, {a.data(), a.size()}, ecfg);
      ++step_idx;
      ++rep.total_steps;
      ep_return += res.reward;
      bool violated = false;
      double phi_max = -std::numeric_limits<double>::infinity();
      double cost_max = -std::numeric_limits<double>::infinity();
      bool safe_subset = true;
      for (std::size_t h = 0; h < ag.hazard_count; ++h) {
        const double phi_s = safety::phi(res.before[h].d, res.before[h].d_dot, sp);
        const double phi_n = safety::phi(res.after[h].d, res.after[h].d_dot, sp);
        phi_max = std::max(phi_max, phi_n);
        cost_max = std::max(cost_max, safety::transition_cost(phi_s, phi_n, sp.eta));
        if (safety::phi0(res.after[h].d, sp) > 0.0) violated = true;
        if (phi_n > 0.0 || safety::phi0(res.after[h].d, sp) > 0.0) safe_subset = false;
      }
      if (violated) {
        ++rep.violation_steps;
        ++total_cost;
      }
      if (probe != nullptr) {
        probe->push_back(ProbeRow{step_idx, phi_max, cost_max, safe_subset});
      }
      done = res.done;
      if (res.goal_reached) ++rep.goals_reached;
      state = next_state;
      obs = std::move(res.next_observation);
    }
    total_return += ep_return;
  }
  if (episodes > 0) {
    rep.mean_return = total_return / static_cast<double>(episodes);
    rep.mean_episode_cost = static_cast<double>(total_cost) / static_cast<double>(episodes);
  }
  return rep;
}

InvarianceReport check_invariance(const Agent& ag, const env::EnvConfig& ecfg,
                                  const safety::SafetyIndexParams& sp, std::size_t rollouts,
                                  std::uint64_t seed) {
  ecfg.validate();
  sp.validate();
  require(env::obs_dim(ecfg) == ag.obs_dim && ecfg.hazard_count() == ag.hazard_count,
          "check_invariance: environment does not match the agent's layout");
  Rng rng(splitmix64(seed ^ 0x494e5641524e4345ull));
  InvarianceReport rep;
  rep.rollouts = rollouts;
  for (std::size_t r = 0; r < rollouts; ++r) {
    env::EnvState state = sample_safe_subset_state(ecfg, sp, rng);
    std::vector<double> obs = env::observe(state, ecfg);
    bool escaped = false;
    bool done = false;
    while (!done) {
      const auto a = deterministic_action(ag.policy, obs);
      auto [next_state, res] = env::step(state, {a.data(), a.size()}, ecfg);
      ++rep.total_steps;
      for (std::size_t h = 0; h < ag.hazard_count; ++h) {
        if (safety::phi0(res.after[h].d, sp) > 0.0) escaped = true;
      }
      if (escaped) break;
      done = res.done;
      state = next_state;
      obs = std::move(res.next_observation);
    }
    if (escaped) ++rep.escapes;
  }
  return rep;
}

}  // namespace ssac::learner
