#pragma once

#include <complex>

namespace haarpr {

// Modified Bessel function of the first kind, order zero. Power series for
// |x| <= 15, asymptotic expansion beyond; overflows to +inf near x ~ 709,
// use log_bessel_i0 for large arguments.
double bessel_i0(double x);
double log_bessel_i0(double x);

// I0'(x)/I0(x) = I1(x)/I0(x), evaluated without forming large exponentials.
double bessel_ratio(double x);

// log I0(z), Re z >= 0 after evenness reduction.
std::complex<double> log_bessel_i0_complex(std::complex<double> z);

// Standard normal density / cdf and stable companions.
double norm_pdf(double x);
double norm_cdf(double x);
double log_norm_cdf(double x);      // accurate far into the left tail
double norm_mills(double x);        // pdf(x)/cdf(x)
double norm_quantile(double p);     // refined, ~1e-15

struct BivariateGaussSpec {
  double a = 0.0;
  double b = 0.0;
  double rho = 0.0;  // |rho| <= 1; |rho| = 1 is rejected as degenerate
};

// J(a,b) = E phi_1(a - Z1) phi_1(b - Z2) for unit-variance Gaussians with
// correlation rho, by the closed form.
double bivariate_gauss_integral(const BivariateGaussSpec& spec);

}  // namespace haarpr
