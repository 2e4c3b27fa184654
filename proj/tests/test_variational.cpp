#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "haarpr/errors.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/simulator.hpp"
#include "haarpr/special.hpp"
#include "haarpr/tilted.hpp"
#include "haarpr/variational.hpp"

using namespace haarpr;

namespace {

// second route: Xi1 = 1 - min_t ( E ln Phi(Y/sigma + t) + t^2/2 ),
// minimized by golden section (independent of the Newton solver)
double xi1_second_route(const YMeasure& m) {
  auto obj = [&](double t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.points().size(); ++i)
      acc += m.weights()[i] * log_norm_cdf(m.points()[i] / m.sigma() + t);
    return acc + 0.5 * t * t;
  };
  double a = -30.0, b = 30.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = obj(c), fd = obj(d);
  for (int it = 0; it < 200; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = obj(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = obj(d);
    }
    if (b - a < 1e-12) break;
  }
  return 1.0 - obj(0.5 * (a + b));
}

}  // namespace

TEST_CASE("solve_xi1 population") {
  YMeasure m = YMeasure::population(0.3);
  VariationalSolution sol = solve_xi1(m);
  sol.check_invariants();

  // stationarity: the mean of the tilted variable averages to one
  double mean = 0.0;
  for (std::size_t i = 0; i < m.points().size(); ++i)
    mean += m.weights()[i] * texp_mean({sol.argmax[0], m.points()[i], 0.3});
  CHECK(std::fabs(mean - 1.0) < 1e-8);

  // two algebraic routes agree
  CHECK(std::fabs(sol.value - xi1_second_route(m)) < 1e-7);

  // population tilt stays below one
  CHECK(sol.argmax[0] <= 1.0);

  // approaches 1 from above as sigma decreases
  const double x_02 = solve_xi1(YMeasure::population(0.2)).value;
  const double x_01 = solve_xi1(YMeasure::population(0.1)).value;
  CHECK(sol.value > x_02);
  CHECK(x_02 > x_01);
  CHECK(x_01 > 1.0);
}

TEST_CASE("solve_xi2 anchors") {
  YMeasure m = YMeasure::population(0.3);
  VariationalSolution s1 = solve_xi1(m);
  VariationalSolution s2 = solve_xi2(0.0, m);
  s2.check_invariants();
  CHECK(std::fabs(s2.value - 2.0 * s1.value) < 1e-8);
  CHECK(std::fabs(s2.argmax[1]) < 1e-9);  // phi = 0 at q = 0

  // stationarity identities at an interior q
  VariationalSolution s3 = solve_xi2(0.5, m);
  double esum = 0.0, ecross = 0.0;
  for (std::size_t i = 0; i < m.points().size(); ++i) {
    TwisTerms t =
        twis_terms({s3.argmax[0], s3.argmax[1], m.points()[i], 0.3}, true);
    esum += m.weights()[i] * t.mean_sum;
    ecross += m.weights()[i] * t.mean_cross;
  }
  CHECK(std::fabs(esum - 2.0) < 1e-7);
  CHECK(std::fabs(ecross - 0.5) < 1e-7);

  CHECK_THROWS_AS(solve_xi2(1.0, m), param_error);
}

TEST_CASE("xi2 lower bound near q = 1") {
  YMeasure m = YMeasure::population(0.05);
  const double xi_half = solve_xi2(0.5, m).value;
  const double c_cal = -xi_half - 0.5 * std::log1p(-0.5);
  const double xi_09 = solve_xi2(0.9, m).value;
  CHECK(xi_09 >= -c_cal - 0.5 * std::log1p(-0.9));
}

TEST_CASE("xi2 second derivative") {
  YMeasure m = YMeasure::population(0.3);
  const double dd = xi2_second_derivative(0.4, m);
  CHECK(dd >= 0.0);

  // central finite differences of the optimum value
  const double h = 1e-3;
  VariationalSolution mid = solve_xi2(0.4, m);
  std::array<double, 2> warm{mid.argmax[0], mid.argmax[1]};
  const double up = solve_xi2(0.4 + h, m, warm).value;
  const double dn = solve_xi2(0.4 - h, m, warm).value;
  const double fd = (up - 2.0 * mid.value + dn) / (h * h);
  CHECK(std::fabs(fd - dd) < 1e-4 * std::fabs(dd));

  // zero-noise chain-rule anchor: at q = 0 the curvature tends to 1
  YMeasure small = YMeasure::population(1e-2);
  CHECK(std::fabs(xi2_second_derivative(0.0, small) - 1.0) < 0.02);
}

TEST_CASE("potential concavity along random segments") {
  YMeasure m = YMeasure::population(0.3);
  Rng rng(77);
  for (int rep = 0; rep < 4; ++rep) {
    const double l0 = -2.0 + 4.0 * rng.next_double();
    const double p0 = -2.0 + 4.0 * rng.next_double();
    const double l1 = -2.0 + 4.0 * rng.next_double();
    const double p1 = -2.0 + 4.0 * rng.next_double();
    const double q = 0.3;
    const double va = xi2_potential(l0, p0, q, m);
    const double vb = xi2_potential(l1, p1, q, m);
    const double vm = xi2_potential(0.5 * (l0 + l1), 0.5 * (p0 + p1), q, m);
    CHECK(vm >= 0.5 * (va + vb) - 1e-10);
  }
}

TEST_CASE("argmax bound with frozen constant") {
  for (double sigma : {0.1, 0.3}) {
    YMeasure m = YMeasure::population(sigma);
    const double ey2 = 2.0 + sigma * sigma;
    for (double q : {0.0, 0.5, 0.9}) {
      VariationalSolution sol = solve_xi2(q, m);
      const double bound =
          2.0 * (1.0 + q + 1.0 / (1.0 - q)) * (ey2 + 1.0);
      CHECK(std::fabs(sol.argmax[0]) + std::fabs(sol.argmax[1]) <= bound);
    }
  }
}

TEST_CASE("empirical solves track population") {
  SimConfig cfg;
  cfg.n = 20000;
  cfg.delta = 1.5;
  cfg.sigma = 0.3;
  cfg.ensemble = SimConfig::Ensemble::haar;
  cfg.seed = 4242;
  SimOutput sim = simulate(cfg);
  YMeasure emp = sim.to_measure();
  YMeasure pop = YMeasure::population(0.3);

  const double e1 = solve_xi1(emp).value;
  const double p1 = solve_xi1(pop).value;
  CHECK(std::fabs(e1 - p1) < 0.02);

  VariationalSolution ps = solve_xi2(0.5, pop);
  VariationalSolution es =
      solve_xi2(0.5, emp, std::array<double, 2>{ps.argmax[0], ps.argmax[1]});
  CHECK(std::fabs(es.value - ps.value) < 0.04);
  CHECK(std::fabs(es.argmax[0] - ps.argmax[0]) +
            std::fabs(es.argmax[1] - ps.argmax[1]) <
        0.1);
}
