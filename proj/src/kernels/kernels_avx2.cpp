// AVX2 kernel variants. exp/log are Cephes-style polynomial evaluations;
// they agree with the scalar reference to a few ulp, which the equivalence
// tests pin down.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "haarpr/kernels.hpp"
#include "i0_core.hpp"
#include "quantile_core.hpp"

namespace haarpr::kernels {
namespace {

inline __m256d poly5(__m256d r, double c0, double c1, double c2, double c3,
                     double c4, double c5) {
  __m256d p = _mm256_set1_pd(c0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c1));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c2));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c3));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c4));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c5));
  return p;
}

// ---- exp ----------------------------------------------------------------

inline __m256d vexp4(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.436);
  const __m256d lo = _mm256_set1_pd(-708.396);
  const __m256d x_orig = x;
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  __m256d n = _mm256_floor_pd(_mm256_fmadd_pd(x, log2e, _mm256_set1_pd(0.5)));

  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  x = _mm256_fnmadd_pd(n, c1, x);
  x = _mm256_fnmadd_pd(n, c2, x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(3.02994407707441961300e-2));
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(9.99999999999999999910e-1));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.52448340349684104192e-3));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766e-1));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000005e0));
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // scale by 2^n through the exponent bits
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(n64));

  // saturate outside the clamped range
  const __m256d zero = _mm256_setzero_pd();
  const __m256d inf = _mm256_set1_pd(HUGE_VAL);
  e = _mm256_blendv_pd(e, zero, _mm256_cmp_pd(x_orig, lo, _CMP_LT_OQ));
  e = _mm256_blendv_pd(e, inf, _mm256_cmp_pd(x_orig, hi, _CMP_GT_OQ));
  return e;
}

// ---- log ----------------------------------------------------------------

inline __m256d vlog4(__m256d x) {
  const __m256i mant_mask = _mm256_set1_epi64x(0x000fffffffffffffLL);
  const __m256i half_exp = _mm256_set1_epi64x(0x3fe0000000000000LL);
  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  expo = _mm256_sub_epi64(expo, _mm256_set1_epi64x(1022));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_exp));
  // e as double: exponent fits in int32 lanes after the shift
  __m256d e = _mm256_setzero_pd();
  alignas(32) std::int64_t etmp[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(etmp), expo);
  e = _mm256_set_pd(static_cast<double>(etmp[3]), static_cast<double>(etmp[2]),
                    static_cast<double>(etmp[1]), static_cast<double>(etmp[0]));

  const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);
  const __m256d below = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(below, _mm256_set1_pd(1.0)));
  m = _mm256_add_pd(m, _mm256_and_pd(below, m));  // m *= 2 where below

  // ln m = 2 atanh(w), w = (m-1)/(m+1) in [-0.172, 0.172]; 12 odd terms
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d w = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d w2 = _mm256_mul_pd(w, w);
  __m256d s = _mm256_set1_pd(1.0 / 23.0);
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 21.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 19.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 17.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 15.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 13.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 11.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 9.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 7.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 5.0));
  s = _mm256_fmadd_pd(s, w2, _mm256_set1_pd(1.0 / 3.0));
  s = _mm256_fmadd_pd(s, w2, one);
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), w), s);
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), y);
  return y;
}

// ---- log I0 -------------------------------------------------------------

struct I0Tables {
  double inv_kk[48];    // 1/k^2
  double inv_kk1[48];   // 1/(k(k+1))
  double asym_d[25];    // I0 tail: prod (2j-1)^2 / (k! 8^k)
  double asym_d1[25];   // I1 tail coefficients
  I0Tables() {
    for (int k = 1; k <= 48; ++k) {
      inv_kk[k - 1] = 1.0 / (static_cast<double>(k) * k);
      inv_kk1[k - 1] = 1.0 / (static_cast<double>(k) * (k + 1));
    }
    asym_d[0] = 1.0;
    asym_d1[0] = 1.0;
    for (int k = 1; k <= 24; ++k) {
      const double odd = 2.0 * k - 1.0;
      asym_d[k] = asym_d[k - 1] * odd * odd / (8.0 * k);
      asym_d1[k] = asym_d1[k - 1] * -(4.0 - odd * odd) / (8.0 * k);
    }
  }
};
const I0Tables g_i0tab;

inline __m256d vlog_i0_4(__m256d x) {
  // series branch (valid to 15, evaluated everywhere then blended)
  const __m256d xs = _mm256_min_pd(x, _mm256_set1_pd(i0core::kSeriesCut));
  const __m256d t = _mm256_mul_pd(_mm256_mul_pd(xs, xs), _mm256_set1_pd(0.25));
  __m256d term = _mm256_set1_pd(1.0), sum = _mm256_set1_pd(1.0);
  for (int k = 0; k < 32; ++k) {
    term = _mm256_mul_pd(term, _mm256_mul_pd(t, _mm256_set1_pd(g_i0tab.inv_kk[k])));
    sum = _mm256_add_pd(sum, term);
  }
  const __m256d series_val = vlog4(sum);

  // asymptotic branch
  const __m256d xa = _mm256_max_pd(x, _mm256_set1_pd(i0core::kSeriesCut));
  const __m256d r = _mm256_div_pd(_mm256_set1_pd(1.0), xa);
  __m256d p = _mm256_set1_pd(g_i0tab.asym_d[24]);
  for (int k = 23; k >= 0; --k)
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(g_i0tab.asym_d[k]));
  const __m256d twopix = _mm256_mul_pd(_mm256_set1_pd(2.0 * M_PI), xa);
  __m256d asym_val = _mm256_sub_pd(xa, _mm256_mul_pd(_mm256_set1_pd(0.5), vlog4(twopix)));
  asym_val = _mm256_add_pd(asym_val, vlog4(p));

  const __m256d use_series =
      _mm256_cmp_pd(x, _mm256_set1_pd(i0core::kSeriesCut), _CMP_LE_OQ);
  return _mm256_blendv_pd(asym_val, series_val, use_series);
}

// ---- entry points ---------------------------------------------------------

void a_vexp(const double* x, double* out, std::size_t n, double shift) {
  const __m256d sh = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), sh);
    _mm256_storeu_pd(out + i, vexp4(v));
  }
  for (; i < n; ++i) out[i] = std::exp(x[i] - shift);
}

void a_vlog_i0(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, vlog_i0_4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = i0core::log_i0(x[i]);
}

double a_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, acc0);
  double acc = tmp[0] + tmp[1] + tmp[2] + tmp[3];
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double a_dot3(const double* a, const double* b, const double* c, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(ab, _mm256_loadu_pd(c + i), acc0);
  }
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, acc0);
  double acc = tmp[0] + tmp[1] + tmp[2] + tmp[3];
  for (; i < n; ++i) acc += a[i] * b[i] * c[i];
  return acc;
}

double a_vmax(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, vm);
    m = tmp[0];
    for (int j = 1; j < 4; ++j) m = tmp[j] > m ? tmp[j] : m;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

void a_vi0_ratio(const double* x, double* r, double* rx, std::size_t n) {
  const __m256d cut = _mm256_set1_pd(i0core::kSeriesCut);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    // series branch
    const __m256d vs = _mm256_min_pd(v, cut);
    const __m256d t = _mm256_mul_pd(_mm256_mul_pd(vs, vs), _mm256_set1_pd(0.25));
    __m256d t0 = _mm256_set1_pd(1.0), s0 = _mm256_set1_pd(1.0);
    __m256d t1 = _mm256_set1_pd(1.0), s1 = _mm256_set1_pd(1.0);
    for (int k = 0; k < 32; ++k) {
      t0 = _mm256_mul_pd(t0, _mm256_mul_pd(t, _mm256_set1_pd(g_i0tab.inv_kk[k])));
      t1 = _mm256_mul_pd(t1, _mm256_mul_pd(t, _mm256_set1_pd(g_i0tab.inv_kk1[k])));
      s0 = _mm256_add_pd(s0, t0);
      s1 = _mm256_add_pd(s1, t1);
    }
    const __m256d rx_series =
        _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_div_pd(s1, s0));
    const __m256d r_series = _mm256_mul_pd(vs, rx_series);
    // asymptotic branch
    const __m256d va = _mm256_max_pd(v, cut);
    const __m256d inv = _mm256_div_pd(_mm256_set1_pd(1.0), va);
    __m256d p0 = _mm256_set1_pd(g_i0tab.asym_d[24]);
    __m256d p1 = _mm256_set1_pd(g_i0tab.asym_d1[24]);
    for (int k = 23; k >= 0; --k) {
      p0 = _mm256_fmadd_pd(p0, inv, _mm256_set1_pd(g_i0tab.asym_d[k]));
      p1 = _mm256_fmadd_pd(p1, inv, _mm256_set1_pd(g_i0tab.asym_d1[k]));
    }
    const __m256d r_asym = _mm256_div_pd(p1, p0);
    const __m256d rx_asym = _mm256_mul_pd(r_asym, inv);
    const __m256d use_series = _mm256_cmp_pd(v, cut, _CMP_LE_OQ);
    _mm256_storeu_pd(r + i, _mm256_blendv_pd(r_asym, r_series, use_series));
    _mm256_storeu_pd(rx + i, _mm256_blendv_pd(rx_asym, rx_series, use_series));
  }
  if (i < n) scalar().vi0_ratio(x + i, r + i, rx + i, n - i);
}

void a_vnorm_quantile(const double* p, double* out, std::size_t n) {
  const double plow = 0.02425, phigh = 1.0 - 0.02425;
  const __m256d vlow = _mm256_set1_pd(plow), vhigh = _mm256_set1_pd(phigh);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vp = _mm256_loadu_pd(p + i);
    const __m256d q = _mm256_sub_pd(vp, _mm256_set1_pd(0.5));
    const __m256d r = _mm256_mul_pd(q, q);
    const __m256d num = poly5(r, -3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00);
    __m256d den = _mm256_set1_pd(-5.447609879822406e+01);
    den = _mm256_fmadd_pd(den, r, _mm256_set1_pd(1.615858368580409e+02));
    den = _mm256_fmadd_pd(den, r, _mm256_set1_pd(-1.556989798598866e+02));
    den = _mm256_fmadd_pd(den, r, _mm256_set1_pd(6.680131188771972e+01));
    den = _mm256_fmadd_pd(den, r, _mm256_set1_pd(-1.328068155288572e+01));
    den = _mm256_fmadd_pd(den, r, _mm256_set1_pd(1.0));
    __m256d central = _mm256_div_pd(_mm256_mul_pd(num, q), den);
    _mm256_storeu_pd(out + i, central);
    const __m256d in_tail = _mm256_or_pd(_mm256_cmp_pd(vp, vlow, _CMP_LT_OQ),
                                         _mm256_cmp_pd(vp, vhigh, _CMP_GT_OQ));
    if (_mm256_movemask_pd(in_tail)) {
      for (int j = 0; j < 4; ++j) {
        const double pj = p[i + j];
        if (pj < plow || pj > phigh) out[i + j] = qcore::norm_quantile_raw(pj);
      }
    }
  }
  for (; i < n; ++i) out[i] = qcore::norm_quantile_raw(p[i]);
}

}  // namespace

const Ops* avx2() {
  static const Ops ops = {a_vexp, a_vlog_i0, a_dot, a_dot3, a_vmax,
                          a_vi0_ratio, a_vnorm_quantile, "avx2"};
  return &ops;
}

}  // namespace haarpr::kernels
