// ssac — train / eval / check for the safe-set actor-critic on the built-in
// 2D navigation environment.
//
// Exit codes: 0 success; 1 check reported a failure; 2 configuration or
// feasibility error; 3 numerical abort during training (diagnostic checkpoint
// is written first).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssac/checkpoint.hpp"
#include "ssac/common.hpp"
#include "ssac/config.hpp"
#include "ssac/gradcheck.hpp"
#include "ssac/kernels.hpp"
#include "ssac/learner.hpp"
#include "ssac/metrics.hpp"
#include "ssac/safety.hpp"

namespace fs = std::filesystem;
using namespace ssac;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string kernels;
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::string out;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.config_path, "Config file (defaults apply when omitted)");
  cmd->add_option("overrides", a.overrides,
                  "section.key=value overrides, applied after the config file");
  cmd->add_option("--kernels", a.kernels, "Compute kernels: auto|scalar|avx2|neon");
  cmd->add_option("--seed", a.seed, "Master seed (overrides [run] seed)");
  cmd->add_option("--out", a.out, "Output directory (overrides [run] out)");
}

RunConfig resolve_config(const CLI::App* cmd, ConfigArgs& a) {
  RunConfig cfg;
  if (!a.config_path.empty()) cfg = load_config_file(a.config_path);
  for (const auto& ov : a.overrides) apply_override(cfg, ov);
  if (cmd->count("--seed") > 0) cfg.run.seed = a.seed;
  if (!a.out.empty()) cfg.run.out = a.out;
  if (!a.kernels.empty()) cfg.run.kernels = a.kernels;
  cfg.validate();
  if (!kern::select(cfg.run.kernels.c_str())) {
    throw ConfigError("kernels '" + cfg.run.kernels + "' not available on this machine");
  }
  return cfg;
}

std::string checkpoint_name(std::size_t iteration) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "checkpoint_iter_%06zu.ckpt", iteration);
  return buf;
}

void write_probe_file(const std::string& path, const std::vector<learner::ProbeRow>& rows) {
  std::ofstream os(path);
  require(os.good(), "probe: cannot open '" + path + "'");
  os << kProbeHeader << '\n';
  for (const auto& r : rows) {
    os << r.step << ',' << format_double(r.phi_max) << ',' << format_double(r.transition_cost)
       << ',' << (r.in_safe_subset ? 1 : 0) << '\n';
  }
  require(os.good(), "probe: write to '" + path + "' failed");
}

void print_eval_report(const learner::EvalReport& rep) {
  std::printf("episodes            %zu\n", rep.episodes);
  std::printf("mean_return         %.6f\n", rep.mean_return);
  std::printf("mean_episode_cost   %.6f\n", rep.mean_episode_cost);
  std::printf("violation_steps     %zu\n", rep.violation_steps);
  std::printf("total_steps         %zu\n", rep.total_steps);
  std::printf("goals_reached       %zu\n", rep.goals_reached);
}

int run_train(const CLI::App* cmd, ConfigArgs& args, bool allow_infeasible,
              std::size_t feas_states, int feas_grid) {
  RunConfig cfg = resolve_config(cmd, args);

  // Feasibility gate before any training cost is sunk: with these index
  // parameters and dynamics, is a safe action available everywhere in the
  // safe subset?
  {
    Rng frng(splitmix64(cfg.run.seed ^ 0x4645415342494c49ull));
    const auto rep =
        safety::check_feasibility(cfg.env, cfg.safety, feas_states, feas_grid, frng);
    std::printf("%s\n", rep.summary().c_str());
    if (!rep.feasible()) {
      if (!allow_infeasible) {
        std::fprintf(stderr,
                     "error: safety index is infeasible for these dynamics "
                     "(%zu/%zu sampled safe states have an empty control safe set); "
                     "rerun with --allow-infeasible to train anyway\n",
                     rep.states_with_empty_control_safe_set, rep.states_tested);
        return 2;
      }
      std::printf("continuing despite infeasibility (--allow-infeasible)\n");
    }
  }

  fs::create_directories(cfg.run.out);
  const fs::path out(cfg.run.out);
  {
    std::ofstream os(out / "config.cfg");
    require(os.good(), "train: cannot write resolved config");
    os << canonical_text(cfg);
  }

  MetricsWriter metrics((out / "metrics.csv").string());
  std::ofstream eval_csv(out / "eval.csv");
  require(eval_csv.good(), "train: cannot open eval.csv");
  eval_csv << "iteration,env_steps,mean_return,mean_episode_cost,violation_steps,"
              "total_steps,goals_reached\n";
  eval_csv.flush();

  learner::TrainRngs rngs = learner::TrainRngs::from_seed(cfg.run.seed);

  learner::TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRow& row) { metrics.write_row(row); };
  hooks.on_iteration = [&](std::size_t iter, const learner::Agent& ag) {
    if (cfg.run.eval_interval != 0 && iter % cfg.run.eval_interval == 0) {
      const auto rep = learner::evaluate(ag, cfg.env, cfg.safety, cfg.run.eval_episodes,
                                         /*deterministic=*/true, cfg.run.seed + iter);
      eval_csv << iter << ',' << ag.env_steps << ',' << format_double(rep.mean_return) << ','
               << format_double(rep.mean_episode_cost) << ',' << rep.violation_steps << ','
               << rep.total_steps << ',' << rep.goals_reached << '\n';
      eval_csv.flush();
      std::printf("iter %6zu  eval: return %.3f  violations %zu/%zu steps  goals %zu/%zu\n",
                  iter, rep.mean_return, rep.violation_steps, rep.total_steps,
                  rep.goals_reached, rep.episodes);
      std::fflush(stdout);
    }
    if (cfg.run.checkpoint_interval != 0 && iter % cfg.run.checkpoint_interval == 0) {
      checkpoint::save((out / checkpoint_name(iter)).string(), cfg, ag, rngs);
    }
  };
  hooks.on_diagnostic = [&](const learner::Agent& ag, const std::string& why) {
    std::fprintf(stderr, "numerical abort: %s\n", why.c_str());
    checkpoint::save((out / "diagnostic.ckpt").string(), cfg, ag, rngs);
    std::fprintf(stderr, "diagnostic checkpoint written to %s\n",
                 (out / "diagnostic.ckpt").c_str());
  };

  try {
    learner::Agent ag = learner::train(cfg.env, cfg.safety, cfg.learner, cfg.run.seed,
                                       hooks, &rngs);
    checkpoint::save((out / "final.ckpt").string(), cfg, ag, rngs);
    std::printf("done: %llu env steps, %llu gradient steps; final checkpoint %s\n",
                static_cast<unsigned long long>(ag.env_steps),
                static_cast<unsigned long long>(ag.grad_steps),
                (out / "final.ckpt").c_str());
  } catch (const TrainingError&) {
    return 3;
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& config_crosscheck,
             std::size_t episodes, bool deterministic, const std::string& probe_dir,
             const CLI::App* cmd, std::uint64_t seed_flag) {
  checkpoint::Checkpoint ck = checkpoint::load(ckpt_path);
  if (!config_crosscheck.empty()) {
    const RunConfig other = load_config_file(config_crosscheck);
    if (config_hash(other) != config_hash(ck.config)) {
      throw ConfigError("eval: --config '" + config_crosscheck +
                        "' does not match the checkpoint's embedded config");
    }
  }
  if (!kern::select(ck.config.run.kernels.c_str())) {
    require(kern::select("auto"), "eval: no kernel backend available");
  }
  const std::uint64_t seed = cmd->count("--seed") > 0 ? seed_flag : ck.config.run.seed;

  std::vector<std::vector<learner::ProbeRow>> probes;
  auto* probes_ptr = probe_dir.empty() ? nullptr : &probes;
  const auto rep = learner::evaluate(ck.agent, ck.config.env, ck.config.safety, episodes,
                                     deterministic, seed, probes_ptr);
  if (!probe_dir.empty()) {
    fs::create_directories(probe_dir);
    for (std::size_t e = 0; e < probes.size(); ++e) {
      char name[64];
      std::snprintf(name, sizeof(name), "probe_ep_%03zu.csv", e);
      write_probe_file((fs::path(probe_dir) / name).string(), probes[e]);
    }
    std::printf("wrote %zu probe files to %s\n", probes.size(), probe_dir.c_str());
  }
  print_eval_report(rep);
  return 0;
}

int run_check_gradients(std::size_t seeds, double tol) {
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= seeds; ++s) {
    const auto rep = gradcheck::run(s);
    for (const auto& c : rep.checks) {
      std::printf("seed %3llu  %-10s  max_rel_err %.3e  (%zu params)\n",
                  static_cast<unsigned long long>(s), c.loss.c_str(), c.max_rel_err,
                  c.params);
    }
    worst = std::max(worst, rep.worst_rel_err);
  }
  std::printf("worst relative error over %zu seeds: %.3e (tolerance %.1e)\n", seeds, worst,
              tol);
  const bool ok = worst < tol;
  std::printf("gradients: %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe-set actor-critic: train, evaluate, verify"};
  app.require_subcommand(1);

  // --- train -----------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train an agent and write run artifacts");
  ConfigArgs train_args;
  add_config_options(train, train_args);
  bool allow_infeasible = false;
  std::size_t feas_states = 1000;
  int feas_grid = 11;
  train->add_flag("--allow-infeasible", allow_infeasible,
                  "Proceed even when the feasibility pre-check fails");
  train->add_option("--feasibility-states", feas_states,
                    "Safe-subset states sampled by the pre-check");
  train->add_option("--feasibility-grid", feas_grid,
                    "Action grid resolution per axis for the pre-check");

  // --- eval ------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_ckpt, eval_config, probe_dir;
  std::size_t eval_episodes = 50;
  bool deterministic = false;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--config", eval_config,
                   "Cross-check: error unless this config matches the embedded one");
  eval->add_option("--episodes", eval_episodes, "Number of evaluation episodes");
  eval->add_flag("--deterministic", deterministic, "Use the mean action (no sampling)");
  eval->add_option("--probe", probe_dir,
                   "Write per-episode trajectory probe CSVs into this directory");
  eval->add_option("--seed", eval_seed, "Evaluation seed (default: checkpoint's run seed)");

  // --- check -----------------------------------------------------------------
  auto* check = app.add_subcommand("check", "Verification entry points");
  check->require_subcommand(1);

  auto* ck_grad = check->add_subcommand("gradients",
                                        "Finite-difference check of every loss gradient");
  std::size_t grad_seeds = 20;
  double grad_tol = 1e-4;
  ck_grad->add_option("--seeds", grad_seeds, "Number of random seeds");
  ck_grad->add_option("--tolerance", grad_tol, "Max relative error allowed");

  auto* ck_feas = check->add_subcommand("feasibility",
                                        "Empirical control-safe-set emptiness scan");
  ConfigArgs feas_args;
  add_config_options(ck_feas, feas_args);
  std::size_t feas_n = 10000;
  int feas_res = 21;
  ck_feas->add_option("--states", feas_n, "Safe-subset states to sample");
  ck_feas->add_option("--grid", feas_res, "Action grid resolution per axis");

  auto* ck_inv = check->add_subcommand("invariance",
                                       "Safe-subset rollout escape counter");
  std::string inv_ckpt;
  std::size_t inv_rollouts = 100;
  std::uint64_t inv_seed = 0;
  ck_inv->add_option("--checkpoint", inv_ckpt, "Checkpoint file")->required();
  ck_inv->add_option("--rollouts", inv_rollouts, "Rollouts started inside the safe subset");
  ck_inv->add_option("--seed", inv_seed, "Sampling seed (default: checkpoint's run seed)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return run_train(train, train_args, allow_infeasible, feas_states, feas_grid);
    }
    if (eval->parsed()) {
      return run_eval(eval_ckpt, eval_config, eval_episodes, deterministic, probe_dir,
                      eval, eval_seed);
    }
    if (ck_grad->parsed()) {
      return run_check_gradients(grad_seeds, grad_tol);
    }
    if (ck_feas->parsed()) {
      RunConfig cfg = resolve_config(ck_feas, feas_args);
      Rng rng(splitmix64(cfg.run.seed ^ 0x4645415342494c49ull));
      const auto rep = safety::check_feasibility(cfg.env, cfg.safety, feas_n, feas_res, rng);
      std::printf("%s\n", rep.summary().c_str());
      std::printf("feasibility: %s\n", rep.feasible() ? "PASS" : "FAIL");
      return rep.feasible() ? 0 : 1;
    }
    if (ck_inv->parsed()) {
      checkpoint::Checkpoint ck = checkpoint::load(inv_ckpt);
      if (!kern::select(ck.config.run.kernels.c_str())) {
        require(kern::select("auto"), "no kernel backend available");
      }
      const std::uint64_t seed =
          ck_inv->count("--seed") > 0 ? inv_seed : ck.config.run.seed;
      const auto rep = learner::check_invariance(ck.agent, ck.config.env, ck.config.safety,
                                                 inv_rollouts, seed);
      std::printf("rollouts %zu  escapes %zu  total_steps %zu\n", rep.rollouts, rep.escapes,
                  rep.total_steps);
      std::printf("invariance: %s\n", rep.escapes == 0 ? "PASS" : "FAIL");
      return rep.escapes == 0 ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
  return 0;
}
