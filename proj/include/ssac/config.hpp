#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ssac/env.hpp"
#include "ssac/learner.hpp"
#include "ssac/safety.hpp"

// Sectioned key-value run configuration. Format: `[section]` headers,
// `key = value` lines, `#` comments. Unknown sections or keys are hard
// errors with file:line positions, so hyperparameter typos cannot pass
// silently. The `hazard` key is repeatable; its first occurrence in a file
// replaces the default hazard list, later ones append.

namespace ssac {

struct RunSection {
  std::uint64_t seed = 1;
  std::string out = "runs/out";
  std::size_t eval_interval = 20;   // iterations between eval passes (0 = off)
  std::size_t eval_episodes = 10;
  std::size_t checkpoint_interval = 50;  // iterations (0 = final only)
  std::string kernels = "auto";     // scalar | avx2 | neon | auto
};

struct RunConfig {
  env::EnvConfig env;
  safety::SafetyIndexParams safety;
  learner::LearnerConfig learner;
  RunSection run;

  void validate() const;
};

// Parse from text; `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config_file(const std::string& path);

// Apply one `section.key=value` assignment (CLI override).
void apply_override(RunConfig& cfg, const std::string& assignment);

// Deterministic full re-emission of every key; parse(canonical_text(c))
// reproduces c exactly. Used for checkpoint embedding and hashing.
std::string canonical_text(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(canonical_text(cfg));
}

}  // namespace ssac
