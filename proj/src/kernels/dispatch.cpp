#include "ssac/kernels.hpp"

#include <cstring>

namespace ssac::kern {

// Defined in the variant translation units; null when compiled out.
const Ops* avx2_ops_or_null();
const Ops* neon_ops_or_null();

namespace {

const Ops* pick_auto() {
  if (avx2_supported()) {
    if (const Ops* k = avx2_ops_or_null()) return k;
  }
  if (neon_supported()) {
    if (const Ops* k = neon_ops_or_null()) return k;
  }
  return &scalar_ops();
}

const Ops*& current() {
  static const Ops* k = pick_auto();
  return k;
}

}  // namespace

const Ops& ops() { return *current(); }

bool select(const char* name) {
  if (std::strcmp(name, "auto") == 0) {
    current() = pick_auto();
    return true;
  }
  if (std::strcmp(name, "scalar") == 0) {
    current() = &scalar_ops();
    return true;
  }
  if (std::strcmp(name, "avx2") == 0 && avx2_supported()) {
    if (const Ops* k = avx2_ops_or_null()) {
      current() = k;
      return true;
    }
  }
  if (std::strcmp(name, "neon") == 0 && neon_supported()) {
    if (const Ops* k = neon_ops_or_null()) {
      current() = k;
      return true;
    }
  }
  return false;
}

}  // namespace ssac::kern
