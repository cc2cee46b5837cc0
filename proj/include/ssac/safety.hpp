#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ssac/env.hpp"
#include "ssac/rng.hpp"

// Energy-function core. The raw safety measure is phi0 = d_min - d; the
// higher-order safety index is
//
//   phi(d, d_dot) = sigma + d_min^n - d^n - k * d_dot
//
// and one step's transition cost is
//
//   q_c = phi(s') - max{phi(s) - eta, 0},
//
// which is negative exactly when the step obeys the safe-set constraint:
// phi decreases by at least eta while positive, and stays below zero once
// below. An action is control-safe at s when the (deterministic) successor
// satisfies q_c < 0 for every hazard.

namespace ssac::safety {

struct SafetyIndexParams {
  double sigma = 0.04;  // margin added on top of d_min^n
  int n = 2;            // distance exponent (>= 1)
  double k = 1.0;       // weight on d_dot, seconds
  double d_min = 0.5;   // required clearance from hazard surfaces, meters
  double eta = 0.0;     // per-step decay slack while phi > 0

  void validate() const;  // throws ConfigError
};

double phi0(double d, const SafetyIndexParams& p);

// d^n is evaluated as sign(d)*|d|^n so the index keeps growing as
// penetration deepens even for even n.
double phi(double d, double d_dot, const SafetyIndexParams& p);

double transition_cost(double phi_s, double phi_s_next, double eta);

// Membership tests for the strict inequality use q_c <= -kStrictEps so the
// boundary resolves deterministically.
inline constexpr double kStrictEps = 1e-9;

// Simulates one step of the deterministic dynamics (verification oracle; the
// learner itself never calls this) and checks q_c < 0 for every hazard.
bool is_control_safe(const env::EnvConfig& cfg, const env::EnvState& s,
                     std::span<const double> action, const SafetyIndexParams& p);

// True iff phi <= 0 and phi0 <= 0 for every hazard, reading the per-hazard
// (d, d_dot) pairs out of a flat observation. The state overload computes the
// same sensed pairs the environment would emit, so both routes agree exactly.
bool in_safe_subset(std::span<const double> obs, std::size_t hazard_count,
                    const SafetyIndexParams& p);
bool in_safe_subset(const env::EnvState& s, const env::EnvConfig& cfg,
                    const SafetyIndexParams& p);

struct FeasibilityReport {
  std::size_t states_tested = 0;
  std::size_t states_with_empty_control_safe_set = 0;
  env::EnvState worst_state;  // smallest fraction of safe actions
  double empirical_min_safe_action_fraction = 1.0;

  bool feasible() const { return states_with_empty_control_safe_set == 0; }
  std::string summary() const;
};

// Samples n_states states from the safe subset (positions uniform over the
// arena, velocities uniform in the speed ball, rejection on membership),
// grids the action box at grid_res points per axis, and counts states where
// no grid action is control-safe. Throws ConfigError when rejection sampling
// fails 1e5 consecutive times (safe subset empty).
FeasibilityReport check_feasibility(const env::EnvConfig& cfg, const SafetyIndexParams& p,
                                    std::size_t n_states, int grid_res, Rng& rng);

}  // namespace ssac::safety
