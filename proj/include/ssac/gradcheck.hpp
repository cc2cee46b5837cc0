#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Finite-difference validation of every analytic gradient the learner uses.
// One run builds a small agent on real environment transitions, freezes the
// sampling noise (common random numbers make each loss a pure function of
// the parameters), and compares analytic gradients against central
// differences parameter by parameter.

namespace ssac::gradcheck {

struct LossCheck {
  std::string loss;          // q1 | q2 | qc | policy | multiplier | alpha
  double max_rel_err = 0.0;  // max over parameters of |ga-gfd| / max(|ga|,|gfd|,floor)
  double max_abs_grad = 0.0;
  std::size_t params = 0;
};

struct Report {
  std::uint64_t seed = 0;
  std::vector<LossCheck> checks;
  double worst_rel_err = 0.0;
};

// Relative-error denominator floor: coordinates where both gradients are
// below this are compared absolutely.
inline constexpr double kRelFloor = 1e-6;
inline constexpr double kFdStep = 1e-5;

// hidden = width of the two hidden layers in the checked networks.
Report run(std::uint64_t seed, std::size_t batch = 16, std::size_t hidden = 16);

}  // namespace ssac::gradcheck
