#include "haarpr/y_model.hpp"

#include <algorithm>
#include <cmath>

#include "haarpr/errors.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/special.hpp"

namespace haarpr {

double log_y_density(double y, double sigma) {
  if (!(sigma > 0.0)) throw param_error("y_density: sigma must be > 0");
  return 0.5 * sigma * sigma - y + log_norm_cdf(y / sigma - sigma);
}

double y_density(double y, double sigma) { return std::exp(log_y_density(y, sigma)); }

YMeasure YMeasure::population(double sigma) {
  if (!(sigma > 0.0)) throw param_error("YMeasure::population: sigma must be > 0");
  YMeasure m;
  m.population_ = true;
  m.sigma_ = sigma;

  // u-direction: boundary panels with the e^{-u} weight explicit, then a
  // shifted Gauss-Laguerre tail
  const double a = std::min(0.5, 20.0 * sigma);
  QuadratureRule boundary = composite_legendre(0.0, a, std::max(a / 4.0, 1e-12), 16);
  QuadratureRule lag = gauss_laguerre(96);
  std::vector<double> unodes, uweights;
  unodes.reserve(boundary.size() + lag.size());
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    unodes.push_back(boundary.nodes[i]);
    uweights.push_back(boundary.weights[i] * std::exp(-boundary.nodes[i]));
  }
  const double ea = std::exp(-a);
  for (std::size_t i = 0; i < lag.size(); ++i) {
    unodes.push_back(a + lag.nodes[i]);
    uweights.push_back(ea * lag.weights[i]);
  }

  QuadratureRule herm = gauss_hermite_prob(40);
  m.points_.reserve(unodes.size() * herm.size());
  m.weights_.reserve(unodes.size() * herm.size());
  for (std::size_t i = 0; i < unodes.size(); ++i)
    for (std::size_t j = 0; j < herm.size(); ++j) {
      m.points_.push_back(unodes[i] + sigma * herm.nodes[j]);
      m.weights_.push_back(uweights[i] * herm.weights[j]);
    }
  return m;
}

YMeasure YMeasure::empirical(std::vector<double> sample, double sigma) {
  if (sample.empty()) throw param_error("YMeasure::empirical: empty sample");
  for (double v : sample)
    if (!std::isfinite(v)) throw param_error("YMeasure::empirical: non-finite sample value");
  if (!(sigma > 0.0)) throw param_error("YMeasure::empirical: sigma must be > 0");
  std::sort(sample.begin(), sample.end());
  YMeasure m;
  m.population_ = false;
  m.sigma_ = sigma;
  const double w = 1.0 / static_cast<double>(sample.size());
  m.points_ = std::move(sample);
  m.weights_.assign(m.points_.size(), w);
  return m;
}

double YMeasure::expect(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double v = f(points_[i]);
    if (!std::isfinite(v))
      throw integrand_error("YMeasure::expect: integrand non-finite", points_[i]);
    acc += weights_[i] * v;
  }
  return acc;
}

double population_y_moment(int k, double sigma) {
  if (k < 0) throw param_error("population_y_moment: k < 0");
  // E (U + sigma*eps)^k, U ~ Exp(1): E U^j = j!, E eps^i = (i-1)!! (even i)
  auto factorial = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  auto double_factorial_odd = [](int n) {  // (n-1)!! for even n
    double f = 1.0;
    for (int i = n - 1; i >= 1; i -= 2) f *= i;
    return f;
  };
  auto binom = [&](int n, int j) {
    return factorial(n) / (factorial(j) * factorial(n - j));
  };
  double acc = 0.0;
  for (int i = 0; i <= k; i += 2) {
    acc += binom(k, i) * std::pow(sigma, i) * double_factorial_odd(i) *
           factorial(k - i);
  }
  return acc;
}

}  // namespace haarpr
