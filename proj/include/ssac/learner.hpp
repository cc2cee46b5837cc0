#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ssac/env.hpp"
#include "ssac/metrics.hpp"
#include "ssac/nn.hpp"
#include "ssac/rng.hpp"
#include "ssac/safety.hpp"

// Safe-set actor-critic learner: replay buffer, tanh-squashed Gaussian
// policy, twin soft Q-critics with Polyak targets, a zero-discount safety
// critic predicting the per-hazard safety-index transition cost, a
// non-negative (softplus) state-dependent Lagrange multiplier network trained
// by gradient ascent, and an auto-tuned entropy temperature. Policy and
// temperature update every m_pi gradient steps, the multiplier every
// m_lambda, critics every step.

namespace ssac::learner {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;  // inside log(1 - tanh^2 + eps)

struct LearnerConfig {
  double gamma = 0.99;
  double tau = 0.005;
  int m_pi = 3;       // policy/temperature update interval (gradient steps)
  int m_lambda = 12;  // multiplier ascent interval
  std::size_t batch = 256;
  std::size_t buffer_capacity = 500000;
  // Linear annealing start -> end over the schedule horizon (in updates of
  // the respective optimizer). anneal_horizon 0 means "span the whole run".
  double actor_lr_start = 3e-5, actor_lr_end = 1e-6;
  double critic_lr_start = 8e-5, critic_lr_end = 1e-6;
  double multiplier_lr_start = 5e-5, multiplier_lr_end = 5e-6;
  double alpha_lr_start = 5e-5, alpha_lr_end = 1e-6;
  std::uint64_t anneal_horizon = 0;
  std::size_t hidden_units = 64;
  std::size_t hidden_layers = 2;
  std::size_t env_steps_per_iteration = 1000;
  std::size_t grad_steps_per_iteration = 1000;
  std::size_t iterations = 200;
  // Environment steps taken with uniform random actions before any gradient
  // step, to seed the buffer.
  std::size_t warmup_env_steps = 1000;
  double projection_bound = 1e6;
  double target_entropy = -static_cast<double>(env::kActionDim);
  double init_alpha = 0.2;
  // false = unconstrained ablation: the multiplier term is dropped from the
  // policy objective (identically zero) and safety-critic/multiplier updates
  // are skipped. Uses the same RNG streams, so the policy/critic update
  // trajectory is exactly the plain soft actor-critic baseline.
  bool constrained = true;

  void validate() const;  // throws ConfigError
  std::size_t total_grad_steps() const { return iterations * grad_steps_per_iteration; }
};

// --- Replay -----------------------------------------------------------------

// One environment transition as pushed by the collector. The per-hazard cost
// is the observed safety-index transition cost; phi is the index value at the
// pre-step state.
struct Transition {
  std::vector<double> obs;
  std::array<double, env::kActionDim> action{};
  double reward = 0.0;
  std::vector<double> cost;
  std::vector<double> phi;
  std::vector<double> next_obs;
  bool done = false;
};

// Non-owning view of one stored transition.
struct TransitionView {
  std::span<const double> obs, action, cost, phi, next_obs;
  double reward;
  bool done;
};

// Fixed-capacity ring with FIFO overwrite and uniform sampling with
// replacement. Storage is flat (structure-of-arrays).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t hazard_count);

  void push(const Transition& t);
  TransitionView view(std::size_t i) const;
  // n uniform indices in [0, size), with replacement. Throws on empty buffer.
  void sample_indices(std::size_t n, Rng& rng, std::vector<std::uint32_t>& out) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t hazard_count() const { return hazard_count_; }

 private:
  std::size_t capacity_, obs_dim_, hazard_count_;
  std::size_t size_ = 0, cursor_ = 0;
  std::vector<double> obs_, act_, next_obs_, cost_, phi_, reward_;
  std::vector<unsigned char> done_;
};

// --- Policy -----------------------------------------------------------------

// Trunk maps observation -> [mu (act_dim), log_std (act_dim)]; log_std is
// clamped to [kLogStdMin, kLogStdMax]; emitted action is tanh of the
// reparameterized pre-squash sample u = mu + std * eps.
struct PolicyNet {
  nn::Mlp trunk;
  std::size_t act_dim = env::kActionDim;
};

// Everything one sampled action needs for exact backprop.
struct PolicyEval {
  std::array<double, env::kActionDim> mu{}, log_std{}, std_dev{}, eps{}, u{}, action{};
  std::array<bool, env::kActionDim> log_std_clamped{};
  double log_prob = 0.0;
  nn::ForwardCache cache;
};

// Forward pass with caller-supplied standard-normal noise (pass zeros for the
// mean action). Deterministic; the basis of common-random-number gradient
// checks.
void policy_forward(const PolicyNet& pol, std::span<const double> obs,
                    std::span<const double> eps, PolicyEval& ev);

// Draws eps from rng, then policy_forward.
void sample_action(const PolicyNet& pol, std::span<const double> obs, Rng& rng,
                   PolicyEval& ev);

std::array<double, env::kActionDim> deterministic_action(const PolicyNet& pol,
                                                         std::span<const double> obs);

// Accumulates d(loss)/d(trunk params) into grads given the cotangents of this
// sample's action (d_action, nullable) and of its log-probability (d_logp).
void policy_backward(const PolicyNet& pol, const PolicyEval& ev, const double* d_action,
                     double d_logp, nn::GradBundle& grads);

// --- Agent ------------------------------------------------------------------

// The multiplier head reads one hazard's sensed safety-index value
// phi(d, d_dot) and is shared across hazards. The optimal state-wise
// multiplier is zero wherever the constraint is slack and positive where it
// binds, and "how binding" is ordered by exactly this scalar, so the head
// only has to learn a monotone cliff along a single axis: slack states
// (phi near its far-field floor) push the cliff down on their side while
// boundary states (phi near zero) push it up on theirs, and both agree on
// the slope's sign. Feeding the raw (d, d_dot) pair instead makes the same
// cliff a 2-D boundary that forms far more slowly, and the abundant slack
// samples drag the boundary region down through the shared parameters long
// before it does.
inline constexpr std::size_t kMultiplierInputDim = 1;

// Raw (pre-softplus) output-bias init for the multiplier head. Duals start
// positive so the policy is penalized for predicted cost from the first
// update; states where the constraint never binds then pull their multiplier
// down toward zero, which is the cheap direction for softplus. Starting at
// zero instead makes the near-boundary multiplier climb out of a saturated
// softplus tail after the (far more numerous) slack states have dragged the
// shared head down, which takes longer than the constraint can afford.
inline constexpr double kMultiplierRawInit = 2.0;

struct Agent {
  std::size_t obs_dim = 0;
  std::size_t act_dim = env::kActionDim;
  std::size_t hazard_count = 0;
  safety::SafetyIndexParams safety{};  // for the multiplier head's phi feature

  PolicyNet policy;
  nn::Mlp q1, q2, q1_target, q2_target;
  nn::Mlp qc;          // (obs ++ action) -> per-hazard transition-cost prediction
  nn::Mlp multiplier;  // one hazard's sensed phi -> raw multiplier (softplus on read)
  double log_alpha = 0.0;

  std::uint64_t grad_steps = 0;
  std::uint64_t env_steps = 0;

  nn::AdamState opt_policy, opt_q1, opt_q2, opt_qc, opt_mult;
  nn::ScalarAdam opt_alpha;

  double alpha() const { return std::exp(log_alpha); }
};

Agent make_agent(const LearnerConfig& cfg, const safety::SafetyIndexParams& sp,
                 std::size_t obs_dim, std::size_t hazard_count, std::uint64_t seed);

double softplus(double x);
double sigmoid(double x);

// Reusable forward caches and scratch vectors for the loss kernels; one per
// training loop, so the hot path performs no per-step allocation after the
// first gradient step.
struct LossWorkspace {
  PolicyEval pol;
  nn::ForwardCache q1, q2, t1, t2, qc, mult;
  std::vector<double> sa;         // obs ++ action scratch
  std::vector<double> out_cot;    // network-output cotangent scratch
  std::vector<double> input_cot;  // network-input cotangent scratch
  std::vector<double> lam;        // per-hazard multipliers
};

// Input feature of the multiplier head for hazard h: phi of the sensed
// (d, d_dot) pair read from the observation tail.
double multiplier_feature(const Agent& ag, std::span<const double> obs, std::size_t h);

// Evaluates Lambda_h(s) = softplus(head(multiplier_feature(s, h))) for every
// hazard into out (length hazard_count).
void multipliers(const Agent& ag, std::span<const double> obs, LossWorkspace& ws,
                 double* out);

// --- Losses (each returns the scalar objective and writes gradients) --------
// Mean reduction over the batch. eps spans hold idx.size()*act_dim
// standard-normal draws (common random numbers: freezing eps makes every loss
// a pure function of the parameters).

// Soft Bellman residual for both critics against the shared target
// y = r + gamma*(1-done)*(min(target Q1, target Q2)(s',a') - alpha*log pi(a'|s')).
double q_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
              std::span<const double> eps_next, double gamma, LossWorkspace& ws,
              nn::GradBundle& g1, nn::GradBundle& g2);

// Zero-discount regression of the safety critic on observed costs:
// mean over batch and hazards of 0.5*(Qc(s,a)_h - c_h)^2.
double qc_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
               LossWorkspace& ws, nn::GradBundle& gc);

// Policy objective mean[ alpha*log pi(a|s) - min Q(s,a) + sum_h Lambda_h(s)*Qc(s,a)_h ]
// with a reparameterized; Lambda and alpha are constants here. constrained =
// false drops the Lambda term entirely.
double policy_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
                   std::span<const double> eps, bool constrained, LossWorkspace& ws,
                   nn::GradBundle& gpol);

// Multiplier objective J = mean[ sum_h Lambda_h(s)*Qc(s,a)_h ] with a freshly
// sampled from the current policy. Writes the gradient of J (the ASCENT
// direction; negate for a descent-style optimizer step).
double multiplier_objective(const Agent& ag, const ReplayBuffer& buf,
                            std::span<const std::uint32_t> idx, std::span<const double> eps,
                            LossWorkspace& ws, nn::GradBundle& gmult);

// Temperature objective mean[ -alpha*(log pi(a|s) + target_entropy) ] with
// log pi constant; returns loss and writes d(loss)/d(log alpha).
double alpha_loss(const Agent& ag, const ReplayBuffer& buf, std::span<const std::uint32_t> idx,
                  std::span<const double> eps, double target_entropy, LossWorkspace& ws,
                  double& grad_log_alpha);

// --- Training / evaluation ---------------------------------------------------

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_metrics;
  // Called after every iteration with the live agent (checkpointing, eval).
  std::function<void(std::size_t iteration, const Agent&)> on_iteration;
  // Called once with the agent state if training aborts on a numerical error.
  std::function<void(const Agent&, const std::string&)> on_diagnostic;
};

// RNG streams used by the training loop, all derived from the master seed;
// checkpointed so a saved run documents its exact stream state.
struct TrainRngs {
  Rng env, action, sample, q_noise, pol_noise, mult_noise, alpha_noise;
  static TrainRngs from_seed(std::uint64_t seed);
};

// Runs Algorithm: per iteration, collect env steps (costs computed from the
// observed per-hazard (d, d_dot) pairs only), then take gradient steps with
// the delayed-update schedule; emits one MetricsRow per iteration. The caller
// is responsible for the feasibility pre-check.
Agent train(const env::EnvConfig& ecfg, const safety::SafetyIndexParams& sp,
            const LearnerConfig& lc, std::uint64_t seed, const TrainHooks& hooks = {},
            TrainRngs* rngs_io = nullptr);

struct ProbeRow {
  int step = 0;
  double phi_max = 0.0;          // max over hazards of phi at the post-step state
  double transition_cost = 0.0;  // max over hazards of the step's observed cost
  bool in_safe_subset = false;   // post-step state in {phi<=0} ∩ {phi0<=0}
};

struct EvalReport {
  std::size_t episodes = 0;
  double mean_return = 0.0;
  double mean_episode_cost = 0.0;
  std::size_t violation_steps = 0;
  std::size_t total_steps = 0;
  std::size_t goals_reached = 0;
};

EvalReport evaluate(const Agent& ag, const env::EnvConfig& ecfg,
                    const safety::SafetyIndexParams& sp, std::size_t episodes,
                    bool deterministic, std::uint64_t seed,
                    std::vector<std::vector<ProbeRow>>* probes = nullptr);

struct InvarianceReport {
  std::size_t rollouts = 0;
  std::size_t escapes = 0;  // rollouts with any phi0 > 0 step
  std::size_t total_steps = 0;
};

// Rolls the deterministic policy from states sampled inside the safe subset
// and counts rollouts that ever reach phi0 > 0 on any hazard.
InvarianceReport check_invariance(const Agent& ag, const env::EnvConfig& ecfg,
                                  const safety::SafetyIndexParams& sp, std::size_t rollouts,
                                  std::uint64_t seed);

}  // namespace ssac::learner
