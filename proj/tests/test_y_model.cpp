#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "haarpr/errors.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/special.hpp"
#include "haarpr/y_model.hpp"

using namespace haarpr;

TEST_CASE("y_density normalization and anchors") {
  const double sigma = 0.3;
  // normalization over [-8 sigma, 40]
  QuadratureRule rule = composite_legendre(-8.0 * sigma, 40.0, 0.25, 12);
  double mass = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double p = y_density(rule.nodes[i], sigma);
    mass += rule.weights[i] * p;
    m2 += rule.weights[i] * p * rule.nodes[i] * rule.nodes[i];
  }
  CHECK(std::fabs(mass - 1.0) < 1e-8);
  CHECK(std::fabs(m2 - (2.0 + sigma * sigma)) < 1e-7);

  // oracle: defining convolution int_0^inf e^{-u} phi_sigma(y-u) du
  const double direct = integrate_half_line_log([&](double u) {
    const double t = (0.5 - u) / sigma;
    return -u - 0.5 * t * t - 0.5 * std::log(2.0 * M_PI * sigma * sigma);
  });
  CHECK(std::fabs(y_density(0.5, sigma) - std::exp(direct)) < 1e-10);

  CHECK_THROWS_AS(y_density(0.5, 0.0), param_error);
}

TEST_CASE("population expectations") {
  YMeasure m = YMeasure::population(0.25);
  double mass = 0.0;
  for (double w : m.weights()) mass += w;
  CHECK(std::fabs(mass - 1.0) < 1e-12);

  CHECK(std::fabs(m.expect([](double y) { return y; }) - 1.0) < 1e-10);

  // analytic moments for k <= 6
  for (int k = 1; k <= 6; ++k) {
    const double got = m.expect([&](double y) { return std::pow(y, k); });
    const double want = population_y_moment(k, 0.25);
    CHECK(std::fabs(got - want) < 1e-8 * std::fabs(want));
  }

  // Monte Carlo oracle for E y^3
  Rng rng(3);
  const std::size_t n = 2000000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = -std::log(rng.next_double()) +
                     0.25 * norm_quantile(rng.next_double());
    const double v = y * y * y;
    s1 += v;
    s2 += v * v;
  }
  const double mc = s1 / n;
  const double se = std::sqrt((s2 / n - mc * mc) / n);
  CHECK(std::fabs(m.expect([](double y) { return y * y * y; }) - mc) < 3.0 * se);
}

TEST_CASE("boundary layer is resolved at small sigma") {
  // E ln Phi(Y/sigma) has all its action in the O(sigma) layer at u = 0;
  // cross-check against a dense direct 2-d integration
  const double sigma = 0.02;
  YMeasure m = YMeasure::population(sigma);
  const double got = m.expect([&](double y) { return log_norm_cdf(y / sigma); });
  QuadratureRule uin = composite_legendre(0.0, 1.0, 0.004, 8);
  QuadratureRule utail = gauss_laguerre(96);
  QuadratureRule e = gauss_hermite_prob(60);
  double want = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double ww = e.weights[j], ee = e.nodes[j];
    for (std::size_t i = 0; i < uin.size(); ++i)
      want += ww * uin.weights[i] * std::exp(-uin.nodes[i]) *
              log_norm_cdf((uin.nodes[i] + sigma * ee) / sigma);
    for (std::size_t i = 0; i < utail.size(); ++i)
      want += ww * std::exp(-1.0) * utail.weights[i] *
              log_norm_cdf((1.0 + utail.nodes[i] + sigma * ee) / sigma);
  }
  CHECK(std::fabs(got - want) < 1e-9);
}

TEST_CASE("empirical measure") {
  YMeasure m = YMeasure::empirical({3.0, 1.0, 2.0}, 0.3);
  CHECK(m.expect([](double y) { return y; }) == doctest::Approx(2.0).epsilon(1e-15));
  // stored sorted for reproducible outputs
  CHECK(m.points()[0] == 1.0);
  CHECK(m.points()[2] == 3.0);

  // permutation invariance
  YMeasure m2 = YMeasure::empirical({2.0, 3.0, 1.0}, 0.3);
  CHECK(m.expect([](double y) { return y * y; }) ==
        m2.expect([](double y) { return y * y; }));

  CHECK_THROWS_AS(YMeasure::empirical({}, 0.3), param_error);
  CHECK_THROWS_AS(YMeasure::empirical({1.0, std::nan("")}, 0.3), param_error);
  CHECK_THROWS_AS(m.expect([](double) { return std::nan(""); }), integrand_error);
  try {
    m.expect([](double y) { return y == 2.0 ? std::nan("") : y; });
  } catch (const integrand_error& e) {
    CHECK(e.abscissa() == 2.0);
  }
}
