#include <cstdlib>

#include "haarpr/kernels.hpp"

namespace haarpr::kernels {

#ifndef HAARPR_WITH_AVX2
const Ops* avx2() { return nullptr; }
#endif

namespace {

const Ops& select() {
  const char* force = std::getenv("HAARPR_FORCE_SCALAR");
  if (force && force[0] == '1') return scalar();
#ifdef HAARPR_WITH_AVX2
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    if (const Ops* ops = avx2()) return *ops;
  }
#endif
  return scalar();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = select();
  return ops;
}

}  // namespace haarpr::kernels
