#include "haarpr/special.hpp"

#include <cmath>

#include "haarpr/errors.hpp"
#include "kernels/i0_core.hpp"
#include "kernels/quantile_core.hpp"

namespace haarpr {

namespace {
void require_finite(double x, const char* who) {
  if (!std::isfinite(x)) throw param_error(std::string(who) + ": non-finite input");
}
}  // namespace

double bessel_i0(double x) {
  require_finite(x, "bessel_i0");
  return i0core::i0(x);
}

double log_bessel_i0(double x) {
  require_finite(x, "log_bessel_i0");
  return i0core::log_i0(x);
}

double bessel_ratio(double x) {
  require_finite(x, "bessel_ratio");
  return i0core::i0_ratio(x);
}

std::complex<double> log_bessel_i0_complex(std::complex<double> z) {
  return i0core::log_i0_complex(z);
}

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double log_norm_cdf(double x) {
  if (x >= -25.0) {
    if (x > 8.0) return std::log1p(-0.5 * std::erfc(x * M_SQRT1_2));
    return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
  }
  // asymptotic left tail: Phi(x) = phi(x)/(-x) (1 - 1/x^2 + 3/x^4 - ...)
  const double z2 = 1.0 / (x * x);
  const double series =
      -z2 * (1.0 - z2 * (3.0 - z2 * (15.0 - z2 * (105.0 - z2 * 945.0))));
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log1p(series);
}

double norm_mills(double x) {
  if (x >= -8.0) return norm_pdf(x) / norm_cdf(x);
  const double lphi = -0.5 * x * x - 0.5 * std::log(2.0 * M_PI);
  return std::exp(lphi - log_norm_cdf(x));
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw param_error("norm_quantile: p outside (0,1)");
  return qcore::norm_quantile(p);
}

double bivariate_gauss_integral(const BivariateGaussSpec& spec) {
  require_finite(spec.a, "bivariate_gauss_integral");
  require_finite(spec.b, "bivariate_gauss_integral");
  if (!(std::fabs(spec.rho) <= 1.0))
    throw param_error("bivariate_gauss_integral: |rho| > 1");
  if (std::fabs(spec.rho) == 1.0)
    throw param_error("bivariate_gauss_integral: degenerate correlation |rho| = 1");
  const double r2 = 1.0 - 0.25 * spec.rho * spec.rho;
  const double a = spec.a, b = spec.b;
  const double expo = -(a * a + b * b - spec.rho * a * b) / (4.0 * r2);
  return std::exp(expo) / (4.0 * M_PI * std::sqrt(r2));
}

}  // namespace haarpr
