#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ssac/rng.hpp"

// Deterministic 2D point-mass navigation with circular hazards. The agent is
// a double integrator: actions are accelerations in [-1,1]^2 scaled by a_max,
// velocity is speed-clipped, position is clamped to the arena. Observations
// expose, per hazard, the surface distance d and its time derivative d_dot,
// so energy-function safety quantities are computable from observations
// alone. The hazard sensor saturates: beyond sense_range it reports the pair
// (sense_range, 0), like a rangefinder pegged at its maximum reading.

namespace ssac::env {

inline constexpr std::size_t kActionDim = 2;

struct Hazard {
  double cx = 0.0, cy = 0.0;
  double radius = 0.5;
};

struct EnvConfig {
  double arena_half_width = 3.0;
  double dt = 0.1;
  double a_max = 1.0;
  // Top speed. Kept low enough that, from any state with safety index
  // phi <= 0, full braking can always dissipate phi within one step (the
  // control safe set stays nonempty under the default index parameters).
  double v_max = 0.5;
  // Hazard sensor saturation distance (surface-relative). Observed pairs are
  // (min(d, sense_range), d_dot while d < sense_range else 0). Bounding the
  // reading bounds every observation-derived safety quantity: without it the
  // far-field safety index grows like -d^n across the arena diagonal and
  // transition costs far from any hazard dwarf the near-boundary values that
  // actually carry the safety signal.
  double sense_range = 1.1;
  std::vector<Hazard> hazards = {{0.0, 0.0, 0.5}};
  double goal_x = 2.2, goal_y = 2.2;
  double goal_radius = 0.3;
  int max_episode_steps = 200;
  // Initial positions are drawn uniformly from this box (velocity zero),
  // rejecting any draw closer than reset_clearance to a hazard surface so
  // every episode starts strictly inside the safe region. The default box
  // spans the arena: episodes begin on every side of the hazard, so
  // exploration meets the constraint boundary from the start instead of only
  // after the policy learns to cross the middle.
  double reset_lo_x = -2.6, reset_lo_y = -2.6;
  double reset_hi_x = 2.6, reset_hi_y = 2.6;
  double reset_clearance = 0.6;

  std::size_t hazard_count() const { return hazards.size(); }
  // Throws ConfigError when geometry is inconsistent (hazard/goal outside
  // the arena, empty reset box, non-positive scales).
  void validate() const;
};

// Observation layout: [px, py, vx, vy, goal_dx, goal_dy, (d, d_dot) x hazards].
inline std::size_t obs_dim(const EnvConfig& cfg) { return 6 + 2 * cfg.hazard_count(); }

struct EnvState {
  double px = 0.0, py = 0.0;
  double vx = 0.0, vy = 0.0;
  int step_count = 0;
};

struct HazardObs {
  double d = 0.0;      // ||p - c|| - radius (surface distance; negative inside)
  double d_dot = 0.0;  // d/dt of d; worst-case -||v|| at the degenerate center
};

struct StepResult {
  std::vector<double> next_observation;
  double reward = 0.0;
  bool done = false;
  bool goal_reached = false;
  std::vector<HazardObs> before;  // (d, d_dot) per hazard at the pre-step state
  std::vector<HazardObs> after;   // same at the post-step state
};

// True geometry: d = ||p - c|| - r, d_dot = ((p - c) . v) / ||p - c||. When
// the agent sits numerically on the hazard center the direction is undefined;
// d_dot is then taken as -||v|| (the worst-case inward rate).
HazardObs hazard_distance(const EnvState& s, const Hazard& h);

// What the sensor reports: hazard_distance saturated at sense_range. Beyond
// the range the reading is exactly (sense_range, 0). Observations, StepResult
// before/after pairs, and everything derived from them use this.
HazardObs sensed_hazard(const EnvState& s, const Hazard& h, double sense_range);

std::vector<double> observe(const EnvState& s, const EnvConfig& cfg);

// Uniform position in the reset box with zero velocity, rejecting positions
// within reset_clearance of any hazard surface. Throws ConfigError when 1e5
// consecutive draws are rejected (reset region effectively empty).
std::pair<EnvState, std::vector<double>> reset(const EnvConfig& cfg, Rng& rng);

// Semi-implicit Euler: v' = clip_speed(v + a * a_max * dt), p' = p + v' * dt
// clamped to the arena; a clamped axis also zeroes that velocity component so
// the stored velocity always describes the motion the agent can actually
// perform. Actions outside [-1,1] are clamped (and counted, see
// clamped_action_warnings). Reward is goal progress minus a small action
// penalty, plus 1.0 on goal entry.
std::pair<EnvState, StepResult> step(const EnvState& s, std::span<const double> action,
                                     const EnvConfig& cfg);

// Number of step() calls so far that received an out-of-range action
// (process-wide diagnostic counter).
std::size_t clamped_action_warnings();

}  // namespace ssac::env
