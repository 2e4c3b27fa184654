#pragma once

// Data-parallel inner-loop kernels. A scalar reference implementation always
// exists; an AVX2 variant is selected at runtime when the CPU supports it.
// The two are equivalence-tested against each other. HAARPR_FORCE_SCALAR=1
// in the environment pins the scalar path.

#include <cstddef>

namespace haarpr::kernels {

struct Ops {
  // out[i] = exp(x[i] - shift)
  void (*vexp)(const double* x, double* out, std::size_t n, double shift);
  // out[i] = log I0(x[i]), x[i] >= 0
  void (*vlog_i0)(const double* x, double* out, std::size_t n);
  // sum_i a[i] b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a[i] b[i] c[i]
  double (*dot3)(const double* a, const double* b, const double* c, std::size_t n);
  // max_i x[i]  (n >= 1)
  double (*vmax)(const double* x, std::size_t n);
  // r[i] = I1(x[i])/I0(x[i]) and rx[i] = r[i]/x[i] (-> 1/2 at x = 0), x >= 0
  void (*vi0_ratio)(const double* x, double* r, double* rx, std::size_t n);
  // out[i] = Phi^{-1}(p[i]), p in (0,1); sampling-grade accuracy (~1e-9)
  void (*vnorm_quantile)(const double* p, double* out, std::size_t n);
  const char* name;
};

const Ops& scalar();
const Ops* avx2();     // nullptr when unsupported
const Ops& active();   // runtime-dispatched choice

}  // namespace haarpr::kernels
