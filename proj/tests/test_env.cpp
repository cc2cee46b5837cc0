#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ssac/common.hpp"
#include "ssac/env.hpp"
#include "ssac/rng.hpp"

using namespace ssac;
using namespace ssac::env;

namespace {

EnvConfig default_cfg() {
  EnvConfig cfg;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("config validation rejects inconsistent geometry") {
  EnvConfig cfg = default_cfg();

  EnvConfig bad = cfg;
  bad.hazards = {{2.9, 0.0, 0.5}};  // pokes outside the arena
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.goal_x = 3.2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.reset_lo_x = 0.5;
  bad.reset_hi_x = -0.5;  // negative extent
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.v_max = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.max_episode_steps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("observation layout and dimension") {
  EnvConfig cfg = default_cfg();
  CHECK(obs_dim(cfg) == 8);  // 6 + 2 per hazard
  EnvState s;
  s.px = 1.0;
  s.py = -2.0;
  s.vx = 0.3;
  s.vy = 0.1;
  const auto obs = observe(s, cfg);
  REQUIRE(obs.size() == 8);
  CHECK(obs[0] == 1.0);
  CHECK(obs[1] == -2.0);
  CHECK(obs[2] == 0.3);
  CHECK(obs[3] == 0.1);
  CHECK(obs[4] == doctest::Approx(cfg.goal_x - 1.0));
  CHECK(obs[5] == doctest::Approx(cfg.goal_y + 2.0));
  // (1,-2) is d = sqrt(5) - 0.5 ~ 1.74 from the hazard surface: beyond
  // sense_range, so the sensor pegs at (sense_range, 0).
  CHECK(hazard_distance(s, cfg.hazards[0]).d > cfg.sense_range);
  CHECK(obs[6] == cfg.sense_range);
  CHECK(obs[7] == 0.0);

  // Within range the pair is the true geometry.
  s.px = 0.9;
  s.py = 0.0;
  const auto close = observe(s, cfg);
  const HazardObs ho = hazard_distance(s, cfg.hazards[0]);
  CHECK(ho.d < cfg.sense_range);
  CHECK(close[6] == doctest::Approx(ho.d));
  CHECK(close[7] == doctest::Approx(ho.d_dot));

  cfg.hazards.push_back({1.0, 1.0, 0.3});
  CHECK(obs_dim(cfg) == 10);
}

TEST_CASE("sensor saturates at sense_range") {
  EnvConfig cfg = default_cfg();
  const Hazard& h = cfg.hazards[0];
  EnvState s;
  s.px = 2.5;
  s.py = 0.0;  // d = 2.0, far beyond the default 1.1 range
  s.vx = -0.5;
  s.vy = 0.1;
  const HazardObs pegged = sensed_hazard(s, h, cfg.sense_range);
  CHECK(pegged.d == cfg.sense_range);
  CHECK(pegged.d_dot == 0.0);

  // Exactly at the cap the reading is also pegged (d_dot suppressed).
  s.px = h.radius + cfg.sense_range;
  CHECK(sensed_hazard(s, h, cfg.sense_range).d == cfg.sense_range);
  CHECK(sensed_hazard(s, h, cfg.sense_range).d_dot == 0.0);

  // Just inside the cap the true pair passes through, so the reported
  // distance is continuous across the cap.
  s.px -= 1e-6;
  const HazardObs inside = sensed_hazard(s, h, cfg.sense_range);
  CHECK(inside.d == doctest::Approx(cfg.sense_range - 1e-6));
  CHECK(inside.d_dot == doctest::Approx(-0.5));

  // step() reports sensed pairs on both sides of the transition.
  s.px = -2.9;
  s.py = -2.9;
  s.vx = 0.0;
  s.vy = 0.0;
  const std::vector<double> a = {1.0, 0.0};
  const auto [next, res] = step(s, a, cfg);
  CHECK(res.before[0].d == cfg.sense_range);
  CHECK(res.before[0].d_dot == 0.0);
  CHECK(res.after[0].d == cfg.sense_range);
  CHECK(res.next_observation[6] == cfg.sense_range);

  // A shorter range saturates closer states too.
  cfg.sense_range = 0.2;
  EnvState nearby;
  nearby.px = 0.9;  // d = 0.4
  nearby.vx = -0.3;
  const auto short_obs = observe(nearby, cfg);
  CHECK(short_obs[6] == 0.2);
  CHECK(short_obs[7] == 0.0);

  cfg.sense_range = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("hazard_distance: hand cases and the degenerate center") {
  const Hazard h{0.0, 0.0, 0.5};
  EnvState s;
  s.px = 3.0;
  s.py = 4.0;  // center distance 5
  s.vx = -1.0;
  s.vy = 0.0;
  const HazardObs ho = hazard_distance(s, h);
  CHECK(ho.d == doctest::Approx(4.5));
  // d_dot = (r . v)/|r| = (3*-1 + 4*0)/5
  CHECK(ho.d_dot == doctest::Approx(-0.6));

  // Moving tangentially: d_dot = 0.
  s.vx = 0.0;
  s.vy = 1.0;
  CHECK(hazard_distance(s, h).d_dot == doctest::Approx(0.8));
  s.px = 5.0;
  s.py = 0.0;
  CHECK(hazard_distance(s, h).d_dot == doctest::Approx(0.0));

  // Inside the hazard: d is negative.
  s.px = 0.2;
  s.py = 0.0;
  CHECK(hazard_distance(s, h).d == doctest::Approx(-0.3));

  // Numerically at the center: worst-case inward rate -|v|.
  s.px = 0.0;
  s.py = 0.0;
  s.vx = 0.3;
  s.vy = -0.4;
  const HazardObs deg = hazard_distance(s, h);
  CHECK(deg.d == doctest::Approx(-0.5));
  CHECK(deg.d_dot == doctest::Approx(-0.5));
}

TEST_CASE("reset: deterministic in the rng, clears hazards, zero velocity") {
  const EnvConfig cfg = default_cfg();
  Rng r1(123), r2(123);
  const auto [s1, o1] = reset(cfg, r1);
  const auto [s2, o2] = reset(cfg, r2);
  CHECK(s1.px == s2.px);
  CHECK(s1.py == s2.py);
  CHECK(o1 == o2);
  CHECK(s1.vx == 0.0);
  CHECK(s1.vy == 0.0);
  CHECK(s1.step_count == 0);

  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto [s, obs] = reset(cfg, rng);
    CHECK(s.px >= cfg.reset_lo_x);
    CHECK(s.px <= cfg.reset_hi_x);
    CHECK(s.py >= cfg.reset_lo_y);
    CHECK(s.py <= cfg.reset_hi_y);
    for (const Hazard& h : cfg.hazards) {
      CHECK(hazard_distance(s, h).d >= cfg.reset_clearance);
    }
  }
}

TEST_CASE("reset: throws when the clearance empties the region") {
  EnvConfig cfg = default_cfg();
  cfg.hazards = {{-2.0, -2.0, 0.5}};  // sits in the reset box
  cfg.reset_clearance = 10.0;         // nothing can clear this
  Rng rng(5);
  CHECK_THROWS_AS(reset(cfg, rng), ConfigError);
}

TEST_CASE("step: hand-checked double-integrator update from rest") {
  const EnvConfig cfg = default_cfg();  // dt=0.1, a_max=1
  EnvState s;
  s.px = -2.0;
  s.py = -2.0;
  const std::vector<double> a = {1.0, 0.0};
  const auto [next, res] = step(s, a, cfg);
  CHECK(next.vx == doctest::Approx(0.1));
  CHECK(next.vy == doctest::Approx(0.0));
  CHECK(next.px == doctest::Approx(-2.0 + 0.1 * 0.1));
  CHECK(next.py == doctest::Approx(-2.0));
  CHECK(next.step_count == 1);
  CHECK_FALSE(res.done);
  // Reward: progress toward (2.2, 2.2) minus 0.01*|a|^2.
  const double d0 = std::hypot(cfg.goal_x + 2.0, cfg.goal_y + 2.0);
  const double d1 = std::hypot(cfg.goal_x - next.px, cfg.goal_y - next.py);
  CHECK(res.reward == doctest::Approx((d0 - d1) - 0.01));
  // The input state is not mutated.
  CHECK(s.step_count == 0);
  CHECK(s.px == -2.0);
}

TEST_CASE("step: speed is clipped to v_max") {
  const EnvConfig cfg = default_cfg();  // v_max = 0.5
  EnvState s;
  s.px = -2.0;
  s.py = 0.0;
  s.vx = 0.48;
  const std::vector<double> a = {1.0, 0.0};
  const auto [next, res] = step(s, a, cfg);
  CHECK(std::hypot(next.vx, next.vy) == doctest::Approx(cfg.v_max));
  // Many accelerating steps never exceed v_max.
  EnvState cur = s;
  for (int i = 0; i < 50; ++i) {
    auto [n2, r2] = step(cur, a, cfg);
    CHECK(std::hypot(n2.vx, n2.vy) <= cfg.v_max + 1e-12);
    cur = n2;
  }
}

TEST_CASE("step: arena clamp zeroes the blocked velocity component") {
  const EnvConfig cfg = default_cfg();
  EnvState s;
  s.px = cfg.arena_half_width - 0.001;  // about to hit +x wall
  s.py = 0.0;
  s.vx = 0.4;
  s.vy = 0.2;
  const std::vector<double> a = {1.0, 0.0};
  const auto [next, res] = step(s, a, cfg);
  CHECK(next.px == cfg.arena_half_width);
  CHECK(next.vx == 0.0);       // blocked axis zeroed
  CHECK(next.vy != 0.0);       // free axis keeps moving
  // The post-step observation reports the zeroed velocity, so d_dot derived
  // from it matches the realizable motion.
  CHECK(res.next_observation[2] == 0.0);
}

TEST_CASE("step: out-of-range actions are clamped and counted") {
  const EnvConfig cfg = default_cfg();
  EnvState s;
  s.px = -2.0;
  s.py = -2.0;
  const std::size_t before = clamped_action_warnings();
  const std::vector<double> big = {5.0, 0.0};
  const auto [next_big, r_big] = step(s, big, cfg);
  CHECK(clamped_action_warnings() == before + 1);
  const std::vector<double> unit = {1.0, 0.0};
  const auto [next_unit, r_unit] = step(s, unit, cfg);
  CHECK(next_big.vx == next_unit.vx);  // same dynamics after clamping
  CHECK(next_big.px == next_unit.px);
  // Penalty uses the clamped action.
  CHECK(r_big.reward == doctest::Approx(r_unit.reward));
  CHECK(clamped_action_warnings() == before + 1);  // in-range action not counted
}

TEST_CASE("step: goal entry pays the bonus and terminates") {
  const EnvConfig cfg = default_cfg();
  EnvState s;
  s.px = cfg.goal_x - cfg.goal_radius - 0.02;
  s.py = cfg.goal_y;
  s.vx = 0.4;
  const std::vector<double> a = {0.0, 0.0};
  const auto [next, res] = step(s, a, cfg);
  CHECK(res.goal_reached);
  CHECK(res.done);
  // progress ~ 0.04, bonus 1.0
  CHECK(res.reward > 1.0);
}

TEST_CASE("step: timeout terminates without goal") {
  EnvConfig cfg = default_cfg();
  cfg.max_episode_steps = 3;
  Rng rng(9);
  auto [s, obs] = reset(cfg, rng);
  const std::vector<double> a = {0.0, 0.0};
  for (int i = 1; i <= 3; ++i) {
    auto [next, res] = step(s, a, cfg);
    CHECK(res.done == (i == 3));
    CHECK_FALSE(res.goal_reached);
    s = next;
  }
}

TEST_CASE("step reports before/after hazard observations consistently") {
  const EnvConfig cfg = default_cfg();
  EnvState s;
  s.px = -1.5;
  s.py = 0.0;
  s.vx = 0.3;
  const std::vector<double> a = {0.5, -0.2};
  const auto [next, res] = step(s, a, cfg);
  REQUIRE(res.before.size() == 1);
  REQUIRE(res.after.size() == 1);
  // d ~ 1.0 here: within sense_range, so the sensed pair is the true one.
  const HazardObs b = sensed_hazard(s, cfg.hazards[0], cfg.sense_range);
  const HazardObs af = sensed_hazard(next, cfg.hazards[0], cfg.sense_range);
  CHECK(b.d == doctest::Approx(hazard_distance(s, cfg.hazards[0]).d));
  CHECK(res.before[0].d == doctest::Approx(b.d));
  CHECK(res.before[0].d_dot == doctest::Approx(b.d_dot));
  CHECK(res.after[0].d == doctest::Approx(af.d));
  CHECK(res.after[0].d_dot == doctest::Approx(af.d_dot));
  // after matches the emitted observation tail
  CHECK(res.next_observation[6] == doctest::Approx(af.d));
  CHECK(res.next_observation[7] == doctest::Approx(af.d_dot));
}

TEST_CASE("d_dot is the finite-difference rate of d along coasting steps") {
  // With zero acceleration the step moves p by v*dt exactly, so
  // (d' - d)/dt must match d_dot up to the curvature of the distance field:
  // |d''| <= |v|^2 / center_dist, giving error <= 0.5*v_max^2*dt/dist.
  // This checks the true geometry (hazard_distance), independent of sensor
  // saturation, so states range over the whole arena.
  const EnvConfig cfg = default_cfg();
  const Hazard& h = cfg.hazards[0];
  Rng rng(2024);
  const std::vector<double> coast = {0.0, 0.0};
  int tested = 0;
  for (int i = 0; i < 10000; ++i) {
    EnvState s;
    s.px = rng.uniform(-2.0, 2.0);
    s.py = rng.uniform(-2.0, 2.0);
    const double ang = rng.uniform(0.0, 6.283185307179586);
    const double speed = rng.uniform(0.0, cfg.v_max);
    s.vx = speed * std::cos(ang);
    s.vy = speed * std::sin(ang);
    const double center_dist = std::hypot(s.px - h.cx, s.py - h.cy);
    if (center_dist < 0.3) continue;  // keep curvature bounded
    const HazardObs before = hazard_distance(s, h);
    const auto [next, res] = step(s, coast, cfg);
    const double fd_rate = (hazard_distance(next, h).d - before.d) / cfg.dt;
    const double tol = 0.5 * cfg.v_max * cfg.v_max * cfg.dt / (center_dist - speed * cfg.dt) +
                       1e-9;
    CHECK(std::abs(fd_rate - before.d_dot) <= tol);
    ++tested;
  }
  CHECK(tested > 9000);
}
