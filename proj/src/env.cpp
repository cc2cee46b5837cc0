#include "ssac/env.hpp"

#include <algorithm>
#include <cmath>

#include "ssac/common.hpp"

namespace ssac::env {
namespace {

constexpr double kProgressWeight = 1.0;
constexpr double kActionWeight = 0.01;
constexpr double kGoalBonus = 1.0;
constexpr double kDegenerateDist = 1e-9;
constexpr int kResetAttempts = 100000;

std::size_t g_clamped_warnings = 0;

double dist_to_goal(double px, double py, const EnvConfig& cfg) {
  return std::hypot(cfg.goal_x - px, cfg.goal_y - py);
}

}  // namespace

void EnvConfig::validate() const {
  require(arena_half_width > 0.0, "env: arena_half_width must be positive");
  require(dt > 0.0, "env: dt must be positive");
  require(a_max > 0.0, "env: a_max must be positive");
  require(v_max > 0.0, "env: v_max must be positive");
  require(sense_range > 0.0, "env: sense_range must be positive");
  require(max_episode_steps >= 1, "env: max_episode_steps must be >= 1");
  require(goal_radius > 0.0, "env: goal_radius must be positive");
  const double L = arena_half_width;
  require(std::fabs(goal_x) + goal_radius <= L && std::fabs(goal_y) + goal_radius <= L,
          "env: goal circle must lie inside the arena");
  for (const Hazard& h : hazards) {
    require(h.radius > 0.0, "env: hazard radius must be positive");
    require(std::fabs(h.cx) + h.radius <= L && std::fabs(h.cy) + h.radius <= L,
            "env: hazard must lie inside the arena");
  }
  require(reset_lo_x <= reset_hi_x && reset_lo_y <= reset_hi_y,
          "env: reset box has negative extent");
  require(reset_lo_x >= -L && reset_hi_x <= L && reset_lo_y >= -L && reset_hi_y <= L,
          "env: reset box must lie inside the arena");
  require(reset_clearance >= 0.0, "env: reset_clearance must be non-negative");
}

HazardObs hazard_distance(const EnvState& s, const Hazard& h) {
  const double rx = s.px - h.cx;
  const double ry = s.py - h.cy;
  const double center_dist = std::hypot(rx, ry);
  HazardObs out;
  out.d = center_dist - h.radius;
  if (center_dist < kDegenerateDist) {
    out.d_dot = -std::hypot(s.vx, s.vy);
  } else {
    out.d_dot = (rx * s.vx + ry * s.vy) / center_dist;
  }
  return out;
}

HazardObs sensed_hazard(const EnvState& s, const Hazard& h, double sense_range) {
  HazardObs out = hazard_distance(s, h);
  if (out.d >= sense_range) {
    out.d = sense_range;
    out.d_dot = 0.0;
  }
  return out;
}

std::vector<double> observe(const EnvState& s, const EnvConfig& cfg) {
  std::vector<double> obs;
  obs.reserve(obs_dim(cfg));
  obs.push_back(s.px);
  obs.push_back(s.py);
  obs.push_back(s.vx);
  obs.push_back(s.vy);
  obs.push_back(cfg.goal_x - s.px);
  obs.push_back(cfg.goal_y - s.py);
  for (const Hazard& h : cfg.hazards) {
    const HazardObs ho = sensed_hazard(s, h, cfg.sense_range);
    obs.push_back(ho.d);
    obs.push_back(ho.d_dot);
  }
  return obs;
}

std::pair<EnvState, std::vector<double>> reset(const EnvConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < kResetAttempts; ++attempt) {
    EnvState s;
    s.px = rng.uniform(cfg.reset_lo_x, cfg.reset_hi_x);
    s.py = rng.uniform(cfg.reset_lo_y, cfg.reset_hi_y);
    s.vx = s.vy = 0.0;
    s.step_count = 0;
    bool clear = true;
    for (const Hazard& h : cfg.hazards) {
      if (hazard_distance(s, h).d < cfg.reset_clearance) {
        clear = false;
        break;
      }
    }
    if (clear) return {s, observe(s, cfg)};
  }
  throw ConfigError("env: reset region is empty after hazard exclusion");
}

std::pair<EnvState, StepResult> step(const EnvState& s, std::span<const double> action,
                                     const EnvConfig& cfg) {
  require(action.size() == kActionDim, "env: action dimension mismatch");
  double ax = action[0];
  double ay = action[1];
  if (ax < -1.0 || ax > 1.0 || ay < -1.0 || ay > 1.0) {
    ++g_clamped_warnings;
    ax = std::clamp(ax, -1.0, 1.0);
    ay = std::clamp(ay, -1.0, 1.0);
  }

  StepResult r;
  r.before.reserve(cfg.hazard_count());
  for (const Hazard& h : cfg.hazards) r.before.push_back(sensed_hazard(s, h, cfg.sense_range));

  EnvState next = s;
  next.vx = s.vx + ax * cfg.a_max * cfg.dt;
  next.vy = s.vy + ay * cfg.a_max * cfg.dt;
  const double speed = std::hypot(next.vx, next.vy);
  if (speed > cfg.v_max) {
    const double scale = cfg.v_max / speed;
    next.vx *= scale;
    next.vy *= scale;
  }
  next.px = s.px + next.vx * cfg.dt;
  next.py = s.py + next.vy * cfg.dt;
  const double L = cfg.arena_half_width;
  if (next.px < -L || next.px > L) {
    next.px = std::clamp(next.px, -L, L);
    next.vx = 0.0;
  }
  if (next.py < -L || next.py > L) {
    next.py = std::clamp(next.py, -L, L);
    next.vy = 0.0;
  }
  next.step_count = s.step_count + 1;

  r.after.reserve(cfg.hazard_count());
  for (const Hazard& h : cfg.hazards) r.after.push_back(sensed_hazard(next, h, cfg.sense_range));

  const double progress = dist_to_goal(s.px, s.py, cfg) - dist_to_goal(next.px, next.py, cfg);
  r.reward = kProgressWeight * progress - kActionWeight * (ax * ax + ay * ay);
  r.goal_reached = dist_to_goal(next.px, next.py, cfg) <= cfg.goal_radius;
  if (r.goal_reached) r.reward += kGoalBonus;
  r.done = r.goal_reached || next.step_count >= cfg.max_episode_steps;
  r.next_observation = observe(next, cfg);
  return {next, r};
}

std::size_t clamped_action_warnings() { return g_clamped_warnings; }

}  // namespace ssac::env
