#pragma once

#include <functional>
#include <string>
#include <vector>

namespace haarpr {

// Density of Y = |Z|^2 + sigma*eps at y: exp(sigma^2/2 - y) Phi(y/sigma - sigma).
double y_density(double y, double sigma);
double log_y_density(double y, double sigma);

// The law of the measurement variable Y. Population variant integrates
// E f(E + sigma*eps), E ~ Exp(1), eps ~ N(0,1), with a composite rule:
// boundary panels resolving the O(sigma) layer at u = 0 plus a shifted
// 96-node Gauss-Laguerre tail, tensored with 40-node Gauss-Hermite.
// Empirical variant averages a finite sample (stored sorted).
class YMeasure {
public:
  static YMeasure population(double sigma);
  static YMeasure empirical(std::vector<double> sample, double sigma);

  bool is_population() const { return population_; }
  double sigma() const { return sigma_; }

  // flattened evaluation points and weights; weights sum to 1
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  double expect(const std::function<double(double)>& f) const;

private:
  YMeasure() = default;
  bool population_ = false;
  double sigma_ = 0.0;
  std::vector<double> points_;
  std::vector<double> weights_;
};

// Analytic E Y^k for the population law (Exp(1) and Gaussian moments).
double population_y_moment(int k, double sigma);

}  // namespace haarpr
