#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "haarpr/errors.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/special.hpp"
#include "haarpr/tilted.hpp"
#include "haarpr/y_model.hpp"

using namespace haarpr;

namespace {

// independent oracle for ln Z_texp: direct half-line quadrature
double log_z_texp_quad(double lambda, double y, double sigma) {
  return integrate_half_line_log([&](double u) {
    const double t = (u - y) / sigma;
    return -(1.0 - lambda) * u - 0.5 * t * t -
           0.5 * std::log(2.0 * M_PI * sigma * sigma);
  });
}

// independent oracle for moments: ratio of half-line quadratures
double texp_moment_quad(double lambda, double y, double sigma, int k) {
  const double num = integrate_half_line_log([&](double u) {
    const double t = (u - y) / sigma;
    return k * std::log(u) - (1.0 - lambda) * u - 0.5 * t * t;
  });
  const double den = integrate_half_line_log([&](double u) {
    const double t = (u - y) / sigma;
    return -(1.0 - lambda) * u - 0.5 * t * t;
  });
  return std::exp(num - den);
}

// full 3-d (s, s', theta) quadrature of the pair normalizer, without the
// Bessel collapse; theta by trapezoid (periodic), (s,s') by panels
double log_z_twis_3d(double lambda, double phi, double y, double sigma) {
  const double gamma = lambda - 1.0;
  const double mu = y + gamma * sigma * sigma;
  const double lo = std::max(0.0, mu - 10.0 * sigma);
  const double hi = std::max(mu, 0.0) + (12.0 + std::fabs(phi) * sigma) * sigma;
  QuadratureRule s_rule = composite_legendre(lo, hi, (hi - lo) / 6.0, 28);
  const int ntheta = 256;
  std::vector<double> lv;
  std::vector<double> wv;
  lv.reserve(s_rule.size() * s_rule.size() * ntheta);
  wv.reserve(lv.capacity());
  const double lnorm = -std::log(2.0 * M_PI * sigma * sigma);
  for (std::size_t i = 0; i < s_rule.size(); ++i)
    for (std::size_t j = 0; j < s_rule.size(); ++j) {
      const double s = s_rule.nodes[i], sp = s_rule.nodes[j];
      const double a = (s - y) / sigma, b = (sp - y) / sigma;
      const double base = -(1.0 - lambda) * (s + sp) + lnorm -
                          0.5 * (a * a + b * b);
      const double c = phi * std::sqrt(s * sp);
      const double w2 = s_rule.weights[i] * s_rule.weights[j] / ntheta;
      for (int t = 0; t < ntheta; ++t) {
        lv.push_back(base + c * std::cos(2.0 * M_PI * t / ntheta));
        wv.push_back(w2);
      }
    }
  return logsumexp_weighted(lv, wv);
}

}  // namespace

TEST_CASE("log_z_texp closed form vs quadrature") {
  // zero tilt reproduces the y-density
  CHECK(std::fabs(log_z_texp({0.0, 0.7, 0.3}) - log_y_density(0.7, 0.3)) <
        1e-14);
  CHECK(std::fabs(log_z_texp({0.4, 1.1, 0.3}) - log_z_texp_quad(0.4, 1.1, 0.3)) <
        1e-9);
  Rng rng(23);
  for (int i = 0; i < 25; ++i) {
    const double lambda = -2.0 + 4.0 * rng.next_double();
    const double y = -1.0 + 5.0 * rng.next_double();
    const double sigma = 0.05 + 0.95 * rng.next_double();
    CHECK(std::fabs(log_z_texp({lambda, y, sigma}) -
                    log_z_texp_quad(lambda, y, sigma)) < 1e-9);
  }
}

TEST_CASE("texp moments") {
  CHECK(texp_moment({0.3, 1.0, 0.2}, 0) == 1.0);
  CHECK_THROWS_AS(texp_moment({0.3, 1.0, 0.2}, -1), param_error);
  CHECK_THROWS_AS(texp_moment({0.3, 1.0, 0.2}, 7), param_error);

  // small sigma concentrates at u = y
  CHECK(std::fabs(texp_moment({0.3, 2.0, 1e-3}, 2) - 4.0) < 1e-2);

  // independent quadrature oracle across a parameter sweep
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const double lambda = -1.5 + 3.0 * rng.next_double();
    const double y = -0.5 + 4.0 * rng.next_double();
    const double sigma = 0.1 + 0.7 * rng.next_double();
    const int k = 1 + static_cast<int>(rng.next_double() * 5.999);
    const double want = texp_moment_quad(lambda, y, sigma, k);
    CHECK(std::fabs(texp_moment({lambda, y, sigma}, k) - want) <
          1e-8 * (1.0 + std::fabs(want)));
    CHECK(std::fabs(texp_mean({lambda, y, sigma}) -
                    texp_moment_quad(lambda, y, sigma, 1)) < 1e-9);
  }

  // deep truncation path
  CHECK(std::fabs(texp_moment({-3.0, -2.0, 0.3}, 1) -
                  texp_moment_quad(-3.0, -2.0, 0.3, 1)) < 1e-9);

  // moment bound envelope: E T^3 <= C3 (|y|^3 + |lambda|^3 + 1), C3 frozen
  // from a calibration sweep
  for (int i = 0; i < 40; ++i) {
    const double lambda = -3.0 + 6.0 * rng.next_double();
    const double y = -5.0 + 10.0 * rng.next_double();
    const double m3 = texp_moment({lambda, y, 0.3}, 3);
    CHECK(m3 <= 8.0 * (std::pow(std::fabs(y), 3) +
                       std::pow(std::fabs(lambda), 3) + 1.0));
  }
}

TEST_CASE("texp variance") {
  CHECK(texp_variance({0.5, 1.2, 0.3}) > 0.0);
  // sigma -> 0 concentration: variance ~ sigma^2
  const double v = texp_variance({0.0, 2.0, 1e-3});
  CHECK(v > 1e-6 / 1.1);
  CHECK(v < 1e-6 * 1.1);

  // proof-calibrated envelope on |lambda| <= 3, |y| <= 5 at sigma = 0.3,
  // constants frozen after a sweep
  double vmin = 1e300, vmax = 0.0;
  for (double lambda = -3.0; lambda <= 3.0; lambda += 0.5)
    for (double y = -5.0; y <= 5.0; y += 0.5) {
      const double vv = texp_variance({lambda, y, 0.3});
      vmin = std::min(vmin, vv);
      vmax = std::max(vmax, vv);
    }
  CHECK(vmin >= 1.0 / 2000.0);
  CHECK(vmax <= 2.0);

  // Monte Carlo oracle
  auto draws = sample_texp({0.2, 1.5, 0.4}, 99, 1000000);
  double s1 = 0, s2 = 0, s4 = 0;
  for (double d : draws) {
    s1 += d;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  const double n = static_cast<double>(draws.size());
  const double mean = s1 / n, m2 = s2 / n;
  const double var = m2 - mean * mean;
  const double se_var = std::sqrt((s4 / n - m2 * m2) / n);  // crude
  CHECK(std::fabs(var - texp_variance({0.2, 1.5, 0.4})) < 4.0 * se_var);
}

TEST_CASE("texp sampler") {
  TiltedExpParams p{0.3, 0.8, 0.3};
  auto a = sample_texp(p, 7, 5000);
  auto b = sample_texp(p, 7, 5000);
  CHECK(a == b);
  for (double d : a) CHECK(d >= 0.0);

  auto big = sample_texp(p, 8, 1000000);
  double s1 = 0, s2 = 0;
  for (double d : big) {
    s1 += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(big.size());
  const double mean = s1 / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - texp_mean(p)) < 4.0 * se);

  // KS against the quadrature cdf at the 1e-3 level (critical 1.949/sqrt(n))
  const double mu = p.mu();
  const double z0 = norm_cdf(mu / p.sigma);
  std::vector<double> sample = sample_texp(p, 9, 100000);
  std::sort(sample.begin(), sample.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = (norm_cdf((sample[i] - mu) / p.sigma) - (1.0 - z0)) / z0;
    dmax = std::max(dmax, std::fabs(f - (i + 0.5) / sample.size()));
  }
  CHECK(dmax < 1.949 / std::sqrt(static_cast<double>(sample.size())));

  // deep truncation branch draws stay nonnegative with the right mean
  TiltedExpParams deep{-2.0, -1.5, 0.3};
  auto d = sample_texp(deep, 11, 200000);
  double m1 = 0;
  for (double v : d) {
    CHECK(v >= 0.0);
    m1 += v;
  }
  m1 /= static_cast<double>(d.size());
  CHECK(std::fabs(m1 - texp_mean(deep)) < 5e-4);
}

TEST_CASE("log_z_twis identities and 3-d oracle") {
  // phi = 0 factorizes
  const double two = log_z_twis({0.35, 0.0, 1.3, 0.3});
  CHECK(std::fabs(two - 2.0 * log_z_texp({0.35, 1.3, 0.3})) < 1e-11);
  // even in phi
  CHECK(log_z_twis({0.2, -0.8, 1.0, 0.3}) == log_z_twis({0.2, 0.8, 1.0, 0.3}));
  // collapsed form matches the full 3-d integral
  CHECK(std::fabs(log_z_twis({0.2, 0.8, 1.0, 0.3}) -
                  log_z_twis_3d(0.2, 0.8, 1.0, 0.3)) < 1e-7);
  CHECK(std::fabs(log_z_twis({-0.5, 2.5, 0.4, 0.25}) -
                  log_z_twis_3d(-0.5, 2.5, 0.4, 0.25)) < 1e-7);
}

TEST_CASE("twis gradient and hessian identities") {
  const TiltedWishartParams p{0.1, 0.6, 0.9, 0.3};
  TwisTerms t = twis_terms(p, true);
  const double h = 1e-5;
  const double dl = (log_z_twis({p.lambda + h, p.phi, p.y, p.sigma}) -
                     log_z_twis({p.lambda - h, p.phi, p.y, p.sigma})) /
                    (2.0 * h);
  const double dp = (log_z_twis({p.lambda, p.phi + h, p.y, p.sigma}) -
                     log_z_twis({p.lambda, p.phi - h, p.y, p.sigma})) /
                    (2.0 * h);
  CHECK(std::fabs(dl - t.mean_sum) < 1e-6);
  CHECK(std::fabs(dp - t.mean_cross) < 1e-6);

  // joint convexity: finite-difference hessian equals the covariance of the
  // sufficient statistics and is positive semidefinite
  const double h2 = 5e-4;
  auto lz = [&](double dl2, double dp2) {
    return log_z_twis({p.lambda + dl2, p.phi + dp2, p.y, p.sigma});
  };
  const double base = lz(0, 0);
  const double hll = (lz(h2, 0) - 2 * base + lz(-h2, 0)) / (h2 * h2);
  const double hpp = (lz(0, h2) - 2 * base + lz(0, -h2)) / (h2 * h2);
  const double hlp =
      (lz(h2, h2) - lz(h2, -h2) - lz(-h2, h2) + lz(-h2, -h2)) / (4 * h2 * h2);
  CHECK(std::fabs(hll - t.h11) < 1e-5 * (1.0 + t.h11));
  CHECK(std::fabs(hpp - t.h22) < 1e-5 * (1.0 + t.h22));
  CHECK(std::fabs(hlp - t.h12) < 1e-5 * (1.0 + std::fabs(t.h12)));
  CHECK(t.h11 * t.h22 - t.h12 * t.h12 >= 0.0);
}

TEST_CASE("ln Z_texp is convex in lambda with derivative = mean") {
  for (double y : {-0.5, 0.4, 2.0})
    for (double lambda : {-1.0, 0.0, 0.8}) {
      const double h = 1e-4;
      auto f = [&](double l) { return log_z_texp({l, y, 0.3}); };
      const double second =
          (f(lambda + h) - 2.0 * f(lambda) + f(lambda - h)) / (h * h);
      CHECK(second >= -1e-8);
      const double first = (f(lambda + h) - f(lambda - h)) / (2.0 * h);
      CHECK(std::fabs(first - texp_mean({lambda, y, 0.3})) < 1e-6);
    }
}

TEST_CASE("twis_moments structure") {
  // phi = 0: block-diagonal with equal off-diagonal variances
  WishartMomentBlock b0 = twis_moments({0.2, 0.0, 1.1, 0.3});
  CHECK(b0.mean_off == 0.0);
  CHECK(std::fabs(b0.cov[2][2] - b0.cov[3][3]) < 1e-12);
  CHECK(b0.cov[0][2] == 0.0);

  WishartMomentBlock b = twis_moments({0.1, 0.5, 0.8, 0.3});
  CHECK(b.min_cov_eigenvalue() > 0.0);
  CHECK(b.cov[3][0] == 0.0);  // Im block decouples

  // Monte Carlo oracle for means and covariance
  auto draws = sample_twis({0.1, 0.5, 0.8, 0.3}, 12345, 400000);
  const double n = static_cast<double>(draws.size());
  double vs[4] = {0, 0, 0, 0}, vs2[4] = {0, 0, 0, 0};
  double cov_acc[4][4] = {};
  std::vector<std::array<double, 4>> vecs(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& d = draws[i];
    const double c = std::sqrt(d.s * d.sp);
    vecs[i] = {d.s, d.sp, c * std::cos(d.theta), c * std::sin(d.theta)};
    for (int j = 0; j < 4; ++j) {
      vs[j] += vecs[i][j];
      vs2[j] += vecs[i][j] * vecs[i][j];
    }
  }
  double mean[4];
  for (int j = 0; j < 4; ++j) mean[j] = vs[j] / n;
  CHECK(std::fabs(mean[0] - b.mean_diag) <
        4.0 * std::sqrt((vs2[0] / n - mean[0] * mean[0]) / n));
  CHECK(std::fabs(mean[2] - b.mean_off) <
        4.0 * std::sqrt((vs2[2] / n - mean[2] * mean[2]) / n));
  CHECK(std::fabs(mean[3]) < 4.0 * std::sqrt((vs2[3] / n) / n));
  for (const auto& v : vecs)
    for (int i2 = 0; i2 < 4; ++i2)
      for (int j2 = 0; j2 < 4; ++j2)
        cov_acc[i2][j2] += (v[i2] - mean[i2]) * (v[j2] - mean[j2]);
  for (int i2 = 0; i2 < 4; ++i2)
    for (int j2 = 0; j2 < 4; ++j2) {
      const double c = cov_acc[i2][j2] / n;
      // loose per-entry tolerance ~ 5 standard errors of a covariance entry
      const double scale =
          std::sqrt((vs2[i2] / n) * (vs2[j2] / n)) + 1e-12;
      CHECK(std::fabs(c - b.cov[i2][j2]) < 5.0 * scale / std::sqrt(n) + 1e-4);
    }
}

TEST_CASE("twis sampler identities") {
  TiltedWishartParams p{0.1, 0.7, 1.0, 0.3};
  auto draws = sample_twis(p, 5, 200000);
  const double n = static_cast<double>(draws.size());
  double ssin = 0, ssin2 = 0, ssum = 0, ssum2 = 0;
  for (const auto& d : draws) {
    const double v = std::sqrt(d.s * d.sp) * std::sin(d.theta);
    ssin += v;
    ssin2 += v * v;
    const double u = d.s + d.sp;
    ssum += u;
    ssum2 += u * u;
  }
  const double msin = ssin / n;
  CHECK(std::fabs(msin) < 4.0 * std::sqrt((ssin2 / n - msin * msin) / n));

  // gradient identity: E(s+s') = d/d lambda ln Z by finite differences
  const double h = 1e-4;
  const double fd = (log_z_twis({p.lambda + h, p.phi, p.y, p.sigma}) -
                     log_z_twis({p.lambda - h, p.phi, p.y, p.sigma})) /
                    (2.0 * h);
  const double msum = ssum / n;
  CHECK(std::fabs(msum - fd) < 4.0 * std::sqrt((ssum2 / n - msum * msum) / n));

  // strong coupling concentrates the angle
  TiltedWishartParams strong{0.2, 6.0, 4.0, 0.2};
  WishartMomentBlock mb = twis_moments(strong);
  CHECK(strong.phi * mb.mean_diag >= 20.0);
  auto sd = sample_twis(strong, 6, 50000);
  double mcos = 0;
  for (const auto& d : sd) mcos += std::cos(d.theta);
  mcos /= static_cast<double>(sd.size());
  CHECK(mcos >= 0.9);

  // determinism
  auto again = sample_twis(p, 5, 1000);
  CHECK(again[0].s == draws[0].s);
  CHECK(again[999].theta == draws[999].theta);
}

TEST_CASE("twis grid snapshot is a probability table") {
  TwisGrid g = twis_grid({0.1, 0.5, 1.0, 0.3});
  double mass = 0.0;
  for (double p : g.prob) mass += p;
  CHECK(std::fabs(mass - 1.0) < 1e-12);
  CHECK(g.sqss.size() == g.prob.size());
  CHECK(std::fabs(g.log_z - log_z_twis({0.1, 0.5, 1.0, 0.3})) < 1e-9);
}
