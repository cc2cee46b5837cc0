#include "ssac/safety.hpp"

#include <cmath>
#include <sstream>

#include "ssac/common.hpp"

namespace ssac::safety {
namespace {

constexpr int kSampleAttempts = 100000;

double signed_pow(double d, int n) {
  const double mag = std::pow(std::fabs(d), n);
  return d < 0.0 ? -mag : mag;
}

}  // namespace

void SafetyIndexParams::validate() const {
  require(std::isfinite(sigma) && sigma >= 0.0, "safety_index: sigma must be >= 0");
  require(n >= 1, "safety_index: n must be an integer >= 1");
  require(std::isfinite(k) && k > 0.0, "safety_index: k must be > 0");
  require(std::isfinite(d_min) && d_min > 0.0, "safety_index: d_min must be > 0");
  require(std::isfinite(eta) && eta >= 0.0, "safety_index: eta must be >= 0");
}

double phi0(double d, const SafetyIndexParams& p) { return p.d_min - d; }

double phi(double d, double d_dot, const SafetyIndexParams& p) {
  return p.sigma + std::pow(p.d_min, p.n) - signed_pow(d, p.n) - p.k * d_dot;
}

double transition_cost(double phi_s, double phi_s_next, double eta) {
  return phi_s_next - std::max(phi_s - eta, 0.0);
}

bool is_control_safe(const env::EnvConfig& cfg, const env::EnvState& s,
                     std::span<const double> action, const SafetyIndexParams& p) {
  auto [next, result] = env::step(s, action, cfg);
  (void)next;
  for (std::size_t i = 0; i < cfg.hazard_count(); ++i) {
    const double phi_s = phi(result.before[i].d, result.before[i].d_dot, p);
    const double phi_next = phi(result.after[i].d, result.after[i].d_dot, p);
    if (transition_cost(phi_s, phi_next, p.eta) > -kStrictEps) return false;
  }
  return true;
}

bool in_safe_subset(std::span<const double> obs, std::size_t hazard_count,
                    const SafetyIndexParams& p) {
  require(obs.size() >= 6 + 2 * hazard_count, "in_safe_subset: observation too short");
  for (std::size_t i = 0; i < hazard_count; ++i) {
    const double d = obs[6 + 2 * i];
    const double d_dot = obs[6 + 2 * i + 1];
    if (phi(d, d_dot, p) > 0.0 || phi0(d, p) > 0.0) return false;
  }
  return true;
}

bool in_safe_subset(const env::EnvState& s, const env::EnvConfig& cfg,
                    const SafetyIndexParams& p) {
  for (const env::Hazard& h : cfg.hazards) {
    const env::HazardObs ho = env::sensed_hazard(s, h, cfg.sense_range);
    if (phi(ho.d, ho.d_dot, p) > 0.0 || phi0(ho.d, p) > 0.0) return false;
  }
  return true;
}

std::string FeasibilityReport::summary() const {
  std::ostringstream os;
  os << "feasibility: " << states_with_empty_control_safe_set << "/" << states_tested
     << " sampled safe-subset states have an empty control safe set; "
     << "min safe-action fraction " << empirical_min_safe_action_fraction
     << " at state p=(" << worst_state.px << "," << worst_state.py << ") v=("
     << worst_state.vx << "," << worst_state.vy << ")";
  return os.str();
}

FeasibilityReport check_feasibility(const env::EnvConfig& cfg, const SafetyIndexParams& p,
                                    std::size_t n_states, int grid_res, Rng& rng) {
  require(n_states >= 1, "check_feasibility: n_states must be >= 1");
  require(grid_res >= 3, "check_feasibility: grid resolution must be >= 3");
  cfg.validate();
  p.validate();

  FeasibilityReport report;
  const double L = cfg.arena_half_width;
  for (std::size_t i = 0; i < n_states; ++i) {
    // Rejection-sample a state from the safe subset.
    env::EnvState s;
    bool found = false;
    for (int attempt = 0; attempt < kSampleAttempts; ++attempt) {
      s.px = rng.uniform(-L, L);
      s.py = rng.uniform(-L, L);
      // Uniform over the speed disk via rejection on the bounding square.
      double vx, vy;
      do {
        vx = rng.uniform(-cfg.v_max, cfg.v_max);
        vy = rng.uniform(-cfg.v_max, cfg.v_max);
      } while (vx * vx + vy * vy > cfg.v_max * cfg.v_max);
      s.vx = vx;
      s.vy = vy;
      s.step_count = 0;
      if (in_safe_subset(s, cfg, p)) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("check_feasibility: could not sample from the safe subset "
                        "(is it empty under these parameters?)");
    }

    std::size_t safe_actions = 0;
    const std::size_t total_actions =
        static_cast<std::size_t>(grid_res) * static_cast<std::size_t>(grid_res);
    for (int ia = 0; ia < grid_res; ++ia) {
      for (int ib = 0; ib < grid_res; ++ib) {
        const double action[2] = {-1.0 + 2.0 * ia / (grid_res - 1),
                                  -1.0 + 2.0 * ib / (grid_res - 1)};
        if (is_control_safe(cfg, s, action, p)) ++safe_actions;
      }
    }
    ++report.states_tested;
    if (safe_actions == 0) ++report.states_with_empty_control_safe_set;
    const double fraction =
        static_cast<double>(safe_actions) / static_cast<double>(total_actions);
    if (report.states_tested == 1 || fraction < report.empirical_min_safe_action_fraction) {
      report.empirical_min_safe_action_fraction = fraction;
      report.worst_state = s;
    }
  }
  return report;
}

}  // namespace ssac::safety
