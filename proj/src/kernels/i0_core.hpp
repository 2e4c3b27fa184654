#pragma once

// Shared scalar evaluation of the modified Bessel functions I0, I1 and their
// logarithms. Power series for |x| <= 15, standard asymptotic expansion
// beyond. Both the scalar reference kernels and the public special-function
// API build on these so there is a single source of truth.

#include <cmath>
#include <complex>

namespace haarpr::i0core {

inline constexpr double kSeriesCut = 15.0;

// I0(x) by power series, |x| <= kSeriesCut. Max value ~3.4e5, no overflow.
inline double i0_series(double x) {
  const double t = 0.25 * x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= t / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

// I1(x) by power series, |x| <= kSeriesCut.
inline double i1_series(double x) {
  const double t = 0.25 * x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= t / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return 0.5 * x * sum;
}

// Asymptotic tail sum for I_nu: I_nu(x) ~ e^x/sqrt(2 pi x) * tail_nu(x).
// Terms follow the recurrence t_{k+1} = -t_k (mu - (2k+1)^2) / (8 (k+1) x)
// with mu = 4 nu^2; summation stops at the smallest term.
inline double asym_tail(double x, double mu) {
  double term = 1.0, sum = 1.0, prev = 1.0;
  for (int k = 0; k < 40; ++k) {
    term *= -(mu - (2.0 * k + 1.0) * (2.0 * k + 1.0)) / (8.0 * (k + 1) * x);
    if (std::fabs(term) >= std::fabs(prev)) break;  // divergence onset
    sum += term;
    prev = term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
  }
  return sum;
}

inline double log_i0(double x) {
  x = std::fabs(x);
  if (x <= kSeriesCut) return std::log(i0_series(x));
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(asym_tail(x, 0.0));
}

inline double i0(double x) {
  x = std::fabs(x);
  if (x <= kSeriesCut) return i0_series(x);
  return std::exp(log_i0(x));  // inf for x beyond ~709, by design
}

// I1(x)/I0(x), odd, in (-1,1); computed without forming large exponentials.
inline double i0_ratio(double x) {
  const double ax = std::fabs(x);
  double r;
  if (ax <= kSeriesCut) {
    r = i1_series(ax) / i0_series(ax);
  } else {
    r = asym_tail(ax, 4.0) / asym_tail(ax, 0.0);
  }
  return x < 0 ? -r : r;
}

// log I0(z) for complex z with Re z >= 0 (DLMF 10.40.5 on the tail; series
// for |z| <= 25). Used by the characteristic-function inversion machinery.
inline std::complex<double> log_i0_complex(std::complex<double> z) {
  if (z.real() < 0) z = -z;  // I0 is even
  const double az = std::abs(z);
  if (az <= 25.0) {
    std::complex<double> t = 0.25 * z * z;
    std::complex<double> term = 1.0, sum = 1.0;
    for (int k = 1; k < 80; ++k) {
      term *= t / (static_cast<double>(k) * k);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum) && k > 4) break;
    }
    return std::log(sum);
  }
  // two-exponential asymptotic form; the e^{-z} branch matters near the
  // imaginary axis where both terms are comparable in size
  std::complex<double> s1 = 1.0, s2 = 1.0, term1 = 1.0, term2 = 1.0;
  double prev = 1e300;
  for (int k = 0; k < 24; ++k) {
    const double num = -(0.0 - (2.0 * k + 1.0) * (2.0 * k + 1.0));
    term1 *= num / (8.0 * (k + 1)) / z;    // (-1)^k a_k / z^k accumulated
    term2 *= -num / (8.0 * (k + 1)) / z;   // a_k / z^k accumulated
    if (std::abs(term1) >= prev) break;
    prev = std::abs(term1);
    s1 += term1;
    s2 += term2;
    if (prev < 1e-17) break;
  }
  const std::complex<double> i_unit(0.0, z.imag() >= 0 ? 1.0 : -1.0);
  const std::complex<double> pref = -0.5 * std::log(2.0 * M_PI * z);
  // I0(z) = e^z/sqrt(2 pi z) [ s1 + (+-i) e^{-2z} s2 ]
  const std::complex<double> corr = i_unit * std::exp(-2.0 * z) * s2;
  return z + pref + std::log(s1 + corr);
}

}  // namespace haarpr::i0core
