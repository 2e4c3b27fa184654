#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "haarpr/errors.hpp"
#include "haarpr/free_energy.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/special.hpp"
#include "haarpr/y_model.hpp"

using namespace haarpr;

namespace {

// independent bisection for the zero-noise maximizer, on its own rule
double phi2_oracle(double q) {
  QuadratureRule lag = gauss_laguerre(200);
  auto gap = [&](double phi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < lag.size(); ++i)
      acc += lag.weights[i] * lag.nodes[i] * bessel_ratio(phi * lag.nodes[i]);
    return q - acc;
  };
  double lo = 0.0, hi = 1.0;
  while (gap(hi) > 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("zero-noise variational objects") {
  ZeroNoiseXi2 z0 = zero_noise_xi2(0.0);
  CHECK(std::fabs(z0.value - 2.0) < 1e-8);
  CHECK(std::fabs(z0.phi2) < 1e-8);

  double prev = -1.0;
  for (double q = 0.0; q <= 0.9; q += 0.1) {
    const double p = zero_noise_xi2(q).phi2;
    CHECK(p >= prev - 1e-12);
    prev = p;
  }

  CHECK(std::fabs(zero_noise_xi2(0.5).phi2 - phi2_oracle(0.5)) < 1e-8);
  CHECK_THROWS_AS(zero_noise_xi2(1.0), param_error);

  CHECK(std::fabs(zero_noise_xi2_second_derivative(0.0) - 1.0) < 1e-10);
}

TEST_CASE("zero-noise exponent monotonicity criterion") {
  std::vector<double> grid;
  for (int i = 1; i <= 60; ++i) grid.push_back(0.97 * i / 60.0);
  CHECK(zero_noise_f_increasing(1.5, 0.1, grid));
  CHECK_FALSE(zero_noise_f_increasing(2.4, 0.0, grid));
  CHECK(zero_noise_f_increasing(1.0, 0.5, grid));
}

TEST_CASE("free energy anchors") {
  ModelParams p{0.01, 1.5, 0.0};
  YMeasure m = YMeasure::population(0.01);
  CHECK(std::fabs(free_energy(0.0, p, m)) < 1e-8);

  // small-q expansion: F ~ q^2/2 ((2-delta)/delta)
  const double f01 = free_energy(0.1, p, m);
  const double lead = 0.5 * 0.1 * 0.1 * (2.0 - 1.5) / 1.5;
  CHECK(std::fabs(f01 - lead) < 0.2 * lead);

  // first derivative vanishes at q = 0
  const double h = 1e-2;
  const double d0 = (free_energy(h, p, m) - free_energy(0.0, p, m)) / h;
  CHECK(std::fabs(d0) < 2e-3);

  CHECK_THROWS_AS(free_energy(1.0, p, m), param_error);
}

TEST_CASE("condition verdicts") {
  GridSpec spec{60, 0.99};

  // inside the certified region
  ModelParams good{0.01, 1.8, (2.0 - 1.8) / (2.0 * 1.8)};
  YMeasure m = YMeasure::population(0.01);
  FreeEnergyCurve c1 = check_condition(good, m, spec);
  CHECK(c1.condition_holds);
  CHECK(c1.curvature_at_zero > 0.0);

  // sampling ratio beyond the threshold: curvature flips
  ModelParams bad{0.01, 2.5, 0.01};
  FreeEnergyCurve c2 = check_condition(bad, m, spec);
  CHECK_FALSE(c2.condition_holds);
  CHECK(c2.curvature_at_zero < 0.0);

  // zero-noise branch at the boundary point delta = 2
  ModelParams edge{0.0, 2.0, 0.0};
  FreeEnergyCurve c3 = check_condition(edge, YMeasure::population(0.01), spec);
  CHECK(std::fabs(c3.curvature_at_zero) < 0.01);
}

TEST_CASE("zero-noise consistency of the sigma branch") {
  // F at sigma = 1e-3 within 0.05 of the Bessel branch on q <= 0.9
  ModelParams p{1e-3, 1.5, 0.1};
  YMeasure m = YMeasure::population(1e-3);
  ModelParams p0{0.0, 1.5, 0.1};
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double fs = free_energy(q, p, m);
    const double f0 = free_energy(q, p0, m);
    CHECK(std::fabs(fs - f0) < 0.05);
  }
}

TEST_CASE("gaussian baseline") {
  YMeasure m = YMeasure::population(0.1);
  CHECK(std::fabs(log_f_gauss(0.0, m)) < 1e-10);
  double prev = -1e-12;
  for (double q : {0.1, 0.3, 0.5, 0.7}) {
    const double v = log_f_gauss(q, m);
    CHECK(v >= prev);  // second-moment ratio grows with the overlap
    prev = v;
  }

  // Monte Carlo oracle at q = 0.3: E_Y E_{G1,G2}[...] / p^2
  Rng rng(2024);
  const double q = 0.3, sigma = 0.1;
  const std::size_t n = 2000000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = -std::log(rng.next_double());
    const double y = u + sigma * norm_quantile(rng.next_double());
    const double g1r = norm_quantile(rng.next_double()) * M_SQRT1_2;
    const double g1i = norm_quantile(rng.next_double()) * M_SQRT1_2;
    const double g2r = norm_quantile(rng.next_double()) * M_SQRT1_2;
    const double g2i = norm_quantile(rng.next_double()) * M_SQRT1_2;
    const double r1 = g1r * g1r + g1i * g1i;
    const double mr = q * g1r + std::sqrt(1 - q * q) * g2r;
    const double mi = q * g1i + std::sqrt(1 - q * q) * g2i;
    const double r2 = mr * mr + mi * mi;
    const double v = norm_pdf((y - r1) / sigma) * norm_pdf((y - r2) / sigma) /
                     (sigma * sigma) / std::exp(2.0 * log_y_density(y, sigma));
    s1 += v;
    s2 += v * v;
  }
  const double mc = s1 / n;
  const double se = std::sqrt((s2 / n - mc * mc) / n);
  CHECK(std::fabs(std::exp(log_f_gauss(q, m)) - mc) < 4.0 * se);
}

TEST_CASE("laplace principle checks") {
  // synthetic half-Gaussian curve
  FreeEnergyCurve curve;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const double qq = 0.999 * i / (n - 1);
    curve.grid.push_back(qq);
    curve.values.push_back(0.5 * qq * qq);
  }
  curve.condition_holds = true;
  const double v4 = laplace_check(curve, 1e4);
  const double want = std::log(std::sqrt(M_PI / (2.0 * 1e4))) / 1e4;
  CHECK(std::fabs(v4 - want) < 0.01 * std::fabs(want));

  const double v3 = laplace_check(curve, 1e3);
  CHECK(std::fabs(v3) / std::fabs(v4) >= 5.0);

  // lifted origin: the interior minimum c > 0 dominates
  FreeEnergyCurve lifted;
  const double c = 0.37;
  for (int i = 0; i < n; ++i) {
    const double qq = 0.999 * i / (n - 1);
    lifted.grid.push_back(qq);
    lifted.values.push_back(c + 2.0 * (qq - 0.5) * (qq - 0.5));
  }
  lifted.condition_holds = true;
  CHECK(std::fabs(laplace_check(lifted, 1e4) + c) < 3e-3);

  FreeEnergyCurve failed = curve;
  failed.condition_holds = false;
  CHECK_THROWS_AS(laplace_check(failed, 1e4), param_error);
  CHECK_THROWS_AS(laplace_check(curve, 50.0), param_error);
}
