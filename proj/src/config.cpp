#include "ssac/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "ssac/common.hpp"
#include "ssac/metrics.hpp"

namespace ssac {
namespace {

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

double parse_double(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') bad(where, "expected a number, got '" + v + "'");
  return x;
}

std::vector<double> parse_doubles(const std::string& v, std::size_t n,
                                  const std::string& where) {
  std::istringstream ss(v);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(tok, where));
  if (out.size() != n) {
    bad(where, "expected " + std::to_string(n) + " numbers, got " +
                   std::to_string(out.size()));
  }
  return out;
}

long long parse_int(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') bad(where, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& v, const std::string& where) {
  const long long x = parse_int(v, where);
  if (x < 0) bad(where, "expected a non-negative integer, got '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(where, "expected true/false, got '" + v + "'");
}

struct ParseSession {
  bool hazards_replaced = false;
};

void set_key(RunConfig& c, const std::string& sec, const std::string& key,
             const std::string& val, const std::string& where, ParseSession* session) {
  if (sec == "env") {
    auto& e = c.env;
    if (key == "arena_half_width") e.arena_half_width = parse_double(val, where);
    else if (key == "dt") e.dt = parse_double(val, where);
    else if (key == "a_max") e.a_max = parse_double(val, where);
    else if (key == "v_max") e.v_max = parse_double(val, where);
    else if (key == "sense_range") e.sense_range = parse_double(val, where);
    else if (key == "max_episode_steps") e.max_episode_steps = static_cast<int>(parse_int(val, where));
    else if (key == "goal") {
      const auto g = parse_doubles(val, 3, where);
      e.goal_x = g[0]; e.goal_y = g[1]; e.goal_radius = g[2];
    } else if (key == "reset_box") {
      const auto b = parse_doubles(val, 4, where);
      e.reset_lo_x = b[0]; e.reset_lo_y = b[1]; e.reset_hi_x = b[2]; e.reset_hi_y = b[3];
    } else if (key == "reset_clearance") e.reset_clearance = parse_double(val, where);
    else if (key == "hazard") {
      const auto h = parse_doubles(val, 3, where);
      if (session != nullptr && !session->hazards_replaced) {
        e.hazards.clear();
        session->hazards_replaced = true;
      }
      e.hazards.push_back(env::Hazard{h[0], h[1], h[2]});
    } else bad(where, "unknown key '" + key + "' in section [env]");
  } else if (sec == "safety_index") {
    auto& s = c.safety;
    if (key == "sigma") s.sigma = parse_double(val, where);
    else if (key == "n") s.n = static_cast<int>(parse_int(val, where));
    else if (key == "k") s.k = parse_double(val, where);
    else if (key == "d_min") s.d_min = parse_double(val, where);
    else if (key == "eta") s.eta = parse_double(val, where);
    else bad(where, "unknown key '" + key + "' in section [safety_index]");
  } else if (sec == "learner") {
    auto& l = c.learner;
    if (key == "gamma") l.gamma = parse_double(val, where);
    else if (key == "tau") l.tau = parse_double(val, where);
    else if (key == "m_pi") l.m_pi = static_cast<int>(parse_int(val, where));
    else if (key == "m_lambda") l.m_lambda = static_cast<int>(parse_int(val, where));
    else if (key == "batch") l.batch = parse_uint(val, where);
    else if (key == "buffer_capacity") l.buffer_capacity = parse_uint(val, where);
    else if (key == "actor_lr_start") l.actor_lr_start = parse_double(val, where);
    else if (key == "actor_lr_end") l.actor_lr_end = parse_double(val, where);
    else if (key == "critic_lr_start") l.critic_lr_start = parse_double(val, where);
    else if (key == "critic_lr_end") l.critic_lr_end = parse_double(val, where);
    else if (key == "multiplier_lr_start") l.multiplier_lr_start = parse_double(val, where);
    else if (key == "multiplier_lr_end") l.multiplier_lr_end = parse_double(val, where);
    else if (key == "alpha_lr_start") l.alpha_lr_start = parse_double(val, where);
    else if (key == "alpha_lr_end") l.alpha_lr_end = parse_double(val, where);
    else if (key == "anneal_horizon") l.anneal_horizon = parse_uint(val, where);
    else if (key == "hidden_units") l.hidden_units = parse_uint(val, where);
    else if (key == "hidden_layers") l.hidden_layers = parse_uint(val, where);
    else if (key == "env_steps_per_iteration") l.env_steps_per_iteration = parse_uint(val, where);
    else if (key == "grad_steps_per_iteration") l.grad_steps_per_iteration = parse_uint(val, where);
    else if (key == "iterations") l.iterations = parse_uint(val, where);
    else if (key == "warmup_env_steps") l.warmup_env_steps = parse_uint(val, where);
    else if (key == "projection_bound") l.projection_bound = parse_double(val, where);
    else if (key == "target_entropy") l.target_entropy = parse_double(val, where);
    else if (key == "init_alpha") l.init_alpha = parse_double(val, where);
    else if (key == "constrained") l.constrained = parse_bool(val, where);
    else bad(where, "unknown key '" + key + "' in section [learner]");
  } else if (sec == "run") {
    auto& r = c.run;
    if (key == "seed") r.seed = parse_uint(val, where);
    else if (key == "out") r.out = val;
    else if (key == "eval_interval") r.eval_interval = parse_uint(val, where);
    else if (key == "eval_episodes") r.eval_episodes = parse_uint(val, where);
    else if (key == "checkpoint_interval") r.checkpoint_interval = parse_uint(val, where);
    else if (key == "kernels") {
      if (val != "scalar" && val != "avx2" && val != "neon" && val != "auto") {
        bad(where, "kernels must be scalar|avx2|neon|auto, got '" + val + "'");
      }
      r.kernels = val;
    } else bad(where, "unknown key '" + key + "' in section [run]");
  } else {
    bad(where, "unknown section [" + sec + "]");
  }
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  safety.validate();
  learner.validate();
  require(!run.out.empty(), "run: output directory must not be empty");
  // Cross-module: the sensor must see past the required clearance, otherwise
  // phi0 > 0 states are indistinguishable from safe ones in the observations.
  require(env.sense_range > safety.d_min,
          "env: sense_range must exceed safety_index d_min so violations are observable");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  ParseSession session;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') bad(where, "malformed section header '" + body + "'");
      section = trim(body.substr(1, body.size() - 2));
      if (section != "env" && section != "safety_index" && section != "learner" &&
          section != "run") {
        bad(where, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) bad(where, "expected 'key = value', got '" + body + "'");
    const std::string key = trim(body.substr(0, eq));
    const std::string val = trim(body.substr(eq + 1));
    if (key.empty()) bad(where, "empty key");
    if (section.empty()) bad(where, "key '" + key + "' appears before any [section]");
    set_key(cfg, section, key, val, where, &session);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string where = "override '" + assignment + "'";
  if (eq == std::string::npos) bad(where, "expected section.key=value");
  const std::string dotted = trim(assignment.substr(0, eq));
  const std::string val = trim(assignment.substr(eq + 1));
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) bad(where, "expected section.key=value");
  const std::string sec = dotted.substr(0, dot);
  const std::string key = dotted.substr(dot + 1);
  // No session: a hazard override appends to the current list.
  set_key(cfg, sec, key, val, where, nullptr);
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream os;
  auto d = [](double x) { return format_double(x); };
  os << "[env]\n";
  os << "arena_half_width = " << d(c.env.arena_half_width) << '\n';
  os << "dt = " << d(c.env.dt) << '\n';
  os << "a_max = " << d(c.env.a_max) << '\n';
  os << "v_max = " << d(c.env.v_max) << '\n';
  os << "sense_range = " << d(c.env.sense_range) << '\n';
  os << "max_episode_steps = " << c.env.max_episode_steps << '\n';
  os << "goal = " << d(c.env.goal_x) << ' ' << d(c.env.goal_y) << ' '
     << d(c.env.goal_radius) << '\n';
  os << "reset_box = " << d(c.env.reset_lo_x) << ' ' << d(c.env.reset_lo_y) << ' '
     << d(c.env.reset_hi_x) << ' ' << d(c.env.reset_hi_y) << '\n';
  os << "reset_clearance = " << d(c.env.reset_clearance) << '\n';
  for (const auto& h : c.env.hazards) {
    os << "hazard = " << d(h.cx) << ' ' << d(h.cy) << ' ' << d(h.radius) << '\n';
  }
  os << "[safety_index]\n";
  os << "sigma = " << d(c.safety.sigma) << '\n';
  os << "n = " << c.safety.n << '\n';
  os << "k = " << d(c.safety.k) << '\n';
  os << "d_min = " << d(c.safety.d_min) << '\n';
  os << "eta = " << d(c.safety.eta) << '\n';
  os << "[learner]\n";
  os << "gamma = " << d(c.learner.gamma) << '\n';
  os << "tau = " << d(c.learner.tau) << '\n';
  os << "m_pi = " << c.learner.m_pi << '\n';
  os << "m_lambda = " << c.learner.m_lambda << '\n';
  os << "batch = " << c.learner.batch << '\n';
  os << "buffer_capacity = " << c.learner.buffer_capacity << '\n';
  os << "actor_lr_start = " << d(c.learner.actor_lr_start) << '\n';
  os << "actor_lr_end = " << d(c.learner.actor_lr_end) << '\n';
  os << "critic_lr_start = " << d(c.learner.critic_lr_start) << '\n';
  os << "critic_lr_end = " << d(c.learner.critic_lr_end) << '\n';
  os << "multiplier_lr_start = " << d(c.learner.multiplier_lr_start) << '\n';
  os << "multiplier_lr_end = " << d(c.learner.multiplier_lr_end) << '\n';
  os << "alpha_lr_start = " << d(c.learner.alpha_lr_start) << '\n';
  os << "alpha_lr_end = " << d(c.learner.alpha_lr_end) << '\n';
  os << "anneal_horizon = " << c.learner.anneal_horizon << '\n';
  os << "hidden_units = " << c.learner.hidden_units << '\n';
  os << "hidden_layers = " << c.learner.hidden_layers << '\n';
  os << "env_steps_per_iteration = " << c.learner.env_steps_per_iteration << '\n';
  os << "grad_steps_per_iteration = " << c.learner.grad_steps_per_iteration << '\n';
  os << "iterations = " << c.learner.iterations << '\n';
  os << "warmup_env_steps = " << c.learner.warmup_env_steps << '\n';
  os << "projection_bound = " << d(c.learner.projection_bound) << '\n';
  os << "target_entropy = " << d(c.learner.target_entropy) << '\n';
  os << "init_alpha = " << d(c.learner.init_alpha) << '\n';
  os << "constrained = " << (c.learner.constrained ? "true" : "false") << '\n';
  os << "[run]\n";
  os << "seed = " << c.run.seed << '\n';
  os << "out = " << c.run.out << '\n';
  os << "eval_interval = " << c.run.eval_interval << '\n';
  os << "eval_episodes = " << c.run.eval_episodes << '\n';
  os << "checkpoint_interval = " << c.run.checkpoint_interval << '\n';
  os << "kernels = " << c.run.kernels << '\n';
  return os.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace ssac
