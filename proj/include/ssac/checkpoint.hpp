#pragma once

#include <string>

#include "ssac/config.hpp"
#include "ssac/learner.hpp"

// Versioned text checkpoints. A checkpoint embeds the full canonical config
// (plus its FNV-1a hash for self-validation), every network's parameters, all
// optimizer state, the training counters, and the exact RNG stream states —
// everything except the replay buffer. Doubles are written as C hexfloats so
// a save/load round trip is bitwise exact.

namespace ssac::checkpoint {

inline constexpr int kVersion = 1;
inline constexpr const char* kMagic = "ssac-checkpoint";

struct Checkpoint {
  RunConfig config;
  learner::Agent agent;
  learner::TrainRngs rngs;
};

// Writes to `path` atomically (temp file + rename). Throws ConfigError on
// I/O failure.
void save(const std::string& path, const RunConfig& cfg, const learner::Agent& agent,
          const learner::TrainRngs& rngs);

// Throws ConfigError on unknown version, config-hash mismatch, or any
// structural inconsistency (dimension disagreement, truncated file).
Checkpoint load(const std::string& path);

}  // namespace ssac::checkpoint
