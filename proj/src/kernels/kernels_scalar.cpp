#include "haarpr/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "i0_core.hpp"
#include "quantile_core.hpp"

namespace haarpr::kernels {
namespace {

void s_vexp(const double* x, double* out, std::size_t n, double shift) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i] - shift);
}

void s_vlog_i0(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = i0core::log_i0(x[i]);
}

double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double s_dot3(const double* a, const double* b, const double* c, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i] * c[i];
  return acc;
}

double s_vmax(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

void s_vi0_ratio(const double* x, double* r, double* rx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    if (v <= i0core::kSeriesCut) {
      const double t = 0.25 * v * v;
      double t0 = 1.0, s0 = 1.0, t1 = 1.0, s1 = 1.0;
      for (int k = 1; k < 48; ++k) {
        t0 *= t / (static_cast<double>(k) * k);
        t1 *= t / (static_cast<double>(k) * (k + 1));
        s0 += t0;
        s1 += t1;
        if (t0 < s0 * 1e-18) break;
      }
      rx[i] = 0.5 * s1 / s0;
      r[i] = v * rx[i];
    } else {
      r[i] = i0core::asym_tail(v, 4.0) / i0core::asym_tail(v, 0.0);
      rx[i] = r[i] / v;
    }
  }
}

void s_vnorm_quantile(const double* p, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = qcore::norm_quantile_raw(p[i]);
}

}  // namespace

const Ops& scalar() {
  static const Ops ops = {s_vexp, s_vlog_i0, s_dot, s_dot3, s_vmax,
                          s_vi0_ratio, s_vnorm_quantile, "scalar"};
  return ops;
}

}  // namespace haarpr::kernels
