#include "ssac/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssac/common.hpp"

namespace ssac::checkpoint {
namespace {

// libstdc++'s istream hexfloat extraction is unreliable, so doubles travel as
// whitespace-separated %a tokens parsed with strtod.
void put_double(std::ostream& os, double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", x);
  os << buf;
}

class TokenReader {
 public:
  TokenReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  std::string word(const char* what) {
    std::string tok;
    if (!(in_ >> tok)) fail(std::string("unexpected end of file, expected ") + what);
    return tok;
  }

  void expect(const std::string& keyword) {
    const std::string tok = word(("keyword '" + keyword + "'").c_str());
    if (tok != keyword) {
      fail("expected keyword '" + keyword + "', got '" + tok + "'");
    }
  }

  double real(const char* what) {
    const std::string tok = word(what);
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      fail(std::string("malformed number '") + tok + "' for " + what);
    }
    return x;
  }

  std::uint64_t uint(const char* what) {
    const std::string tok = word(what);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0') {
      fail(std::string("malformed integer '") + tok + "' for " + what);
    }
    return x;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ConfigError("checkpoint '" + path_ + "': " + msg);
  }

  std::istream& stream() { return in_; }

 private:
  std::istream& in_;
  std::string path_;
};

void write_vec(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) {
    os << ' ';
    put_double(os, x);
  }
  os << '\n';
}

void read_vec(TokenReader& r, std::vector<double>& v, std::size_t n, const char* what) {
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = r.real(what);
}

void write_mlp(std::ostream& os, const char* name, const nn::Mlp& net) {
  os << "net " << name << ' ' << net.layer_sizes.size();
  for (std::size_t s : net.layer_sizes) os << ' ' << s;
  os << '\n';
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    write_vec(os, net.weights[l]);
    write_vec(os, net.biases[l]);
  }
}

nn::Mlp read_mlp(TokenReader& r, const char* name) {
  r.expect("net");
  r.expect(name);
  const std::size_t depth = r.uint("layer count");
  if (depth < 2 || depth > 64) r.fail(std::string("implausible layer count for net ") + name);
  nn::Mlp net;
  net.layer_sizes.resize(depth);
  for (auto& s : net.layer_sizes) {
    s = r.uint("layer size");
    if (s == 0 || s > (1u << 20)) r.fail(std::string("implausible layer size for net ") + name);
  }
  net.weights.resize(depth - 1);
  net.biases.resize(depth - 1);
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    read_vec(r, net.weights[l], net.layer_sizes[l + 1] * net.layer_sizes[l], "weight");
    read_vec(r, net.biases[l], net.layer_sizes[l + 1], "bias");
  }
  return net;
}

void write_adam(std::ostream& os, const char* name, const nn::AdamState& a) {
  os << "adam " << name << ' ' << a.step_count << ' ';
  put_double(os, a.beta1);
  os << ' ';
  put_double(os, a.beta2);
  os << ' ';
  put_double(os, a.eps);
  os << ' ';
  put_double(os, a.lr.start);
  os << ' ';
  put_double(os, a.lr.end);
  os << ' ' << a.lr.horizon << '\n';
  for (std::size_t l = 0; l < a.m_w.size(); ++l) {
    write_vec(os, a.m_w[l]);
    write_vec(os, a.v_w[l]);
    write_vec(os, a.m_b[l]);
    write_vec(os, a.v_b[l]);
  }
}

nn::AdamState read_adam(TokenReader& r, const char* name, const nn::Mlp& net) {
  r.expect("adam");
  r.expect(name);
  nn::AdamState a;
  a.step_count = r.uint("adam step count");
  a.beta1 = r.real("beta1");
  a.beta2 = r.real("beta2");
  a.eps = r.real("adam eps");
  a.lr.start = r.real("lr start");
  a.lr.end = r.real("lr end");
  a.lr.horizon = r.uint("lr horizon");
  const std::size_t layers = net.layer_count();
  a.m_w.resize(layers);
  a.v_w.resize(layers);
  a.m_b.resize(layers);
  a.v_b.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t wn = net.weights[l].size();
    const std::size_t bn = net.biases[l].size();
    read_vec(r, a.m_w[l], wn, "adam m_w");
    read_vec(r, a.v_w[l], wn, "adam v_w");
    read_vec(r, a.m_b[l], bn, "adam m_b");
    read_vec(r, a.v_b[l], bn, "adam v_b");
  }
  return a;
}

void write_rng(std::ostream& os, const Rng& rng) {
  os << ' ' << rng;
}

void read_rng(TokenReader& r, Rng& rng) {
  if (!(r.stream() >> rng)) r.fail("malformed RNG state");
}

}  // namespace

void save(const std::string& path, const RunConfig& cfg, const learner::Agent& ag,
          const learner::TrainRngs& rngs) {
  const std::string text = canonical_text(cfg);
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    require(os.good(), "checkpoint: cannot open '" + tmp + "' for writing");
    os << kMagic << ' ' << kVersion << '\n';
    os << "config_hash " << config_hash(cfg) << '\n';
    os << "config_lines " << lines << '\n';
    os << text;
    os << "dims " << ag.obs_dim << ' ' << ag.act_dim << ' ' << ag.hazard_count << '\n';
    os << "progress " << ag.env_steps << ' ' << ag.grad_steps << '\n';
    os << "log_alpha ";
    put_double(os, ag.log_alpha);
    os << '\n';
    write_mlp(os, "policy", ag.policy.trunk);
    write_mlp(os, "q1", ag.q1);
    write_mlp(os, "q2", ag.q2);
    write_mlp(os, "q1_target", ag.q1_target);
    write_mlp(os, "q2_target", ag.q2_target);
    write_mlp(os, "qc", ag.qc);
    write_mlp(os, "multiplier", ag.multiplier);
    write_adam(os, "policy", ag.opt_policy);
    write_adam(os, "q1", ag.opt_q1);
    write_adam(os, "q2", ag.opt_q2);
    write_adam(os, "qc", ag.opt_qc);
    write_adam(os, "multiplier", ag.opt_mult);
    os << "scalar_adam alpha " << ag.opt_alpha.step_count << ' ';
    put_double(os, ag.opt_alpha.m);
    os << ' ';
    put_double(os, ag.opt_alpha.v);
    os << ' ';
    put_double(os, ag.opt_alpha.beta1);
    os << ' ';
    put_double(os, ag.opt_alpha.beta2);
    os << ' ';
    put_double(os, ag.opt_alpha.eps);
    os << ' ';
    put_double(os, ag.opt_alpha.lr.start);
    os << ' ';
    put_double(os, ag.opt_alpha.lr.end);
    os << ' ' << ag.opt_alpha.lr.horizon << '\n';
    os << "rngs";
    write_rng(os, rngs.env);
    write_rng(os, rngs.action);
    write_rng(os, rngs.sample);
    write_rng(os, rngs.q_noise);
    write_rng(os, rngs.pol_noise);
    write_rng(os, rngs.mult_noise);
    write_rng(os, rngs.alpha_noise);
    os << '\n';
    os << "end\n";
    os.flush();
    require(os.good(), "checkpoint: write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "checkpoint: rename '" + tmp + "' -> '" + path + "' failed: " + ec.message());
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "checkpoint: cannot open '" + path + "'");
  TokenReader r(in, path);

  r.expect(kMagic);
  const std::uint64_t version = r.uint("version");
  if (version != static_cast<std::uint64_t>(kVersion)) {
    r.fail("unsupported version " + std::to_string(version) + " (expected " +
           std::to_string(kVersion) + ")");
  }
  r.expect("config_hash");
  const std::uint64_t stored_hash = r.uint("config hash");
  r.expect("config_lines");
  const std::uint64_t config_lines = r.uint("config line count");
  if (config_lines > 100000) r.fail("implausible config line count");
  // Consume the rest of the config_lines line, then the embedded config.
  std::string line;
  std::getline(in, line);
  std::string cfg_text;
  for (std::uint64_t i = 0; i < config_lines; ++i) {
    if (!std::getline(in, line)) r.fail("truncated embedded config");
    cfg_text += line;
    cfg_text += '\n';
  }
  if (fnv1a64(cfg_text) != stored_hash) {
    r.fail("config hash mismatch (file corrupted or hand-edited)");
  }

  Checkpoint ck;
  ck.config = parse_config(cfg_text, path + " [embedded config]");

  learner::Agent& ag = ck.agent;
  ag.safety = ck.config.safety;
  r.expect("dims");
  ag.obs_dim = r.uint("obs_dim");
  ag.act_dim = r.uint("act_dim");
  ag.hazard_count = r.uint("hazard_count");
  r.expect("progress");
  ag.env_steps = r.uint("env_steps");
  ag.grad_steps = r.uint("grad_steps");
  r.expect("log_alpha");
  ag.log_alpha = r.real("log_alpha");

  ag.policy.trunk = read_mlp(r, "policy");
  ag.policy.act_dim = ag.act_dim;
  ag.q1 = read_mlp(r, "q1");
  ag.q2 = read_mlp(r, "q2");
  ag.q1_target = read_mlp(r, "q1_target");
  ag.q2_target = read_mlp(r, "q2_target");
  ag.qc = read_mlp(r, "qc");
  ag.multiplier = read_mlp(r, "multiplier");

  if (ag.obs_dim != env::obs_dim(ck.config.env) ||
      ag.hazard_count != ck.config.env.hazard_count() ||
      ag.act_dim != env::kActionDim) {
    r.fail("dimensions disagree with the embedded config");
  }
  if (ag.policy.trunk.input_dim() != ag.obs_dim ||
      ag.policy.trunk.output_dim() != 2 * ag.act_dim ||
      ag.q1.input_dim() != ag.obs_dim + ag.act_dim || ag.q1.output_dim() != 1 ||
      ag.qc.input_dim() != ag.obs_dim + ag.act_dim ||
      ag.qc.output_dim() != ag.hazard_count ||
      ag.multiplier.input_dim() != learner::kMultiplierInputDim ||
      ag.multiplier.output_dim() != 1) {
    r.fail("network shapes disagree with the recorded dimensions");
  }

  ag.opt_policy = read_adam(r, "policy", ag.policy.trunk);
  ag.opt_q1 = read_adam(r, "q1", ag.q1);
  ag.opt_q2 = read_adam(r, "q2", ag.q2);
  ag.opt_qc = read_adam(r, "qc", ag.qc);
  ag.opt_mult = read_adam(r, "multiplier", ag.multiplier);

  r.expect("scalar_adam");
  r.expect("alpha");
  ag.opt_alpha.step_count = r.uint("alpha step count");
  ag.opt_alpha.m = r.real("alpha m");
  ag.opt_alpha.v = r.real("alpha v");
  ag.opt_alpha.beta1 = r.real("alpha beta1");
  ag.opt_alpha.beta2 = r.real("alpha beta2");
  ag.opt_alpha.eps = r.real("alpha eps");
  ag.opt_alpha.lr.start = r.real("alpha lr start");
  ag.opt_alpha.lr.end = r.real("alpha lr end");
  ag.opt_alpha.lr.horizon = r.uint("alpha lr horizon");

  r.expect("rngs");
  read_rng(r, ck.rngs.env);
  read_rng(r, ck.rngs.action);
  read_rng(r, ck.rngs.sample);
  read_rng(r, ck.rngs.q_noise);
  read_rng(r, ck.rngs.pol_noise);
  read_rng(r, ck.rngs.mult_noise);
  read_rng(r, ck.rngs.alpha_noise);
  r.expect("end");

  return ck;
}

}  // namespace ssac::checkpoint
