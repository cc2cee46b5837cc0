#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

namespace ssac {

// SplitMix64 step, used to derive independent stream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG stream. Distribution objects are constructed per call so
// the full stream state is the engine state alone; this keeps checkpointed
// state minimal and makes replay exact.
class Rng {
 public:
  Rng() : eng_(0) {}
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(eng_);
  }

  double normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(eng_);
  }

  // Uniform integer in [lo, hi] inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    std::uniform_int_distribution<std::uint64_t> d(lo, hi);
    return d(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

  friend std::ostream& operator<<(std::ostream& os, const Rng& r) { return os << r.eng_; }
  friend std::istream& operator>>(std::istream& is, Rng& r) { return is >> r.eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ssac
