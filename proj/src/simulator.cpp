#include "haarpr/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "haarpr/errors.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/special.hpp"
#include "haarpr/tilted.hpp"

namespace haarpr {

namespace {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;

double normal_draw(Rng& rng) { return norm_quantile(rng.next_double()); }

Complex cgauss_draw(Rng& rng) {
  return Complex(normal_draw(rng) * M_SQRT1_2, normal_draw(rng) * M_SQRT1_2);
}

VectorXcd uniform_unit(Rng& rng, std::int64_t n) {
  VectorXcd g(n);
  for (std::int64_t i = 0; i < n; ++i) g(i) = cgauss_draw(rng);
  return g / g.norm();
}

// Exact Haar m x n partial unitary: QR of a complex Gaussian matrix with the
// R-diagonal phase fix.
MatrixXcd haar_partial_unitary(Rng& rng, std::int64_t m, std::int64_t n) {
  MatrixXcd g(m, n);
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) g(i, j) = cgauss_draw(rng);
  Eigen::HouseholderQR<MatrixXcd> qr(g);
  MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(m, n);
  for (std::int64_t j = 0; j < n; ++j) {
    const Complex r = qr.matrixQR()(j, j);
    const double ar = std::abs(r);
    if (ar > 0) q.col(j) *= r / ar;
  }
  return q;
}

// CDP sensing matrix: stacked unitary-DFT times random-phase-diagonal
// blocks, scaled by 1/sqrt(L) so that A^H A = I_n.
MatrixXcd cdp_matrix(Rng& rng, std::int64_t n, int masks) {
  MatrixXcd a(n * masks, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n) * masks);
  for (int l = 0; l < masks; ++l) {
    std::vector<Complex> phase(n);
    for (std::int64_t j = 0; j < n; ++j) {
      const double th = (2.0 * rng.next_double() - 1.0) * M_PI;
      phase[j] = std::polar(1.0, th);
    }
    for (std::int64_t k = 0; k < n; ++k)
      for (std::int64_t j = 0; j < n; ++j) {
        const std::int64_t t = (j * k) % n;
        const double ang = -2.0 * M_PI * static_cast<double>(t) / n;
        a(l * n + k, j) = scale * std::polar(1.0, ang) * phase[j];
      }
  }
  return a;
}

std::vector<double> measure_from_projection(const VectorXcd& ax, double m_scale,
                                            double sigma, Rng& rng) {
  std::vector<double> y(ax.size());
  for (Eigen::Index i = 0; i < ax.size(); ++i)
    y[i] = m_scale * std::norm(ax(i)) + (sigma > 0 ? sigma * normal_draw(rng) : 0.0);
  return y;
}

}  // namespace

void SimConfig::validate() const {
  if (n < 2) throw param_error("SimConfig: n must be >= 2");
  if (!(delta > 0.0)) throw param_error("SimConfig: delta must be > 0");
  if (!(sigma >= 0.0)) throw param_error("SimConfig: sigma must be >= 0");
  if (ensemble == Ensemble::cdp) {
    if (cdp_masks < 1) throw param_error("SimConfig: cdp requires L >= 1");
    if (m() != cdp_masks * n)
      throw param_error("SimConfig: cdp requires m = L * n");
  }
}

std::int64_t SimConfig::m() const {
  if (ensemble == Ensemble::cdp) return static_cast<std::int64_t>(cdp_masks) * n;
  return static_cast<std::int64_t>(std::ceil(delta * static_cast<double>(n)));
}

YMeasure SimOutput::to_measure() const {
  if (!(config.sigma > 0.0))
    throw param_error("SimOutput::to_measure: requires sigma > 0");
  return YMeasure::empirical(y, config.sigma);
}

SimOutput simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::int64_t m = cfg.m();
  SimOutput out;
  out.config = cfg;
  switch (cfg.ensemble) {
    case SimConfig::Ensemble::haar: {
      // marginal law of the first-column projection: y = m|U|^2 + sigma*eps
      VectorXcd u = uniform_unit(rng, m);
      out.y = measure_from_projection(u, static_cast<double>(m), cfg.sigma, rng);
      break;
    }
    case SimConfig::Ensemble::haar_explicit: {
      MatrixXcd a = haar_partial_unitary(rng, m, cfg.n);
      VectorXcd x = uniform_unit(rng, cfg.n);
      VectorXcd ax = a * x;
      out.y = measure_from_projection(ax, static_cast<double>(m), cfg.sigma, rng);
      break;
    }
    case SimConfig::Ensemble::cdp: {
      MatrixXcd a = cdp_matrix(rng, cfg.n, cfg.cdp_masks);
      VectorXcd x = uniform_unit(rng, cfg.n);
      VectorXcd ax = a * x;
      out.y = measure_from_projection(ax, static_cast<double>(m), cfg.sigma, rng);
      break;
    }
    case SimConfig::Ensemble::gaussian: {
      // rows i.i.d. CN(0, I/m): the projected entries are exactly i.i.d.
      // CN(0,1) for a unit signal, so m|<a_i,x>|^2 ~ Exp(1)
      out.y.resize(m);
      for (std::int64_t i = 0; i < m; ++i) {
        const double e = std::norm(cgauss_draw(rng));
        out.y[i] = e + (cfg.sigma > 0 ? cfg.sigma * normal_draw(rng) : 0.0);
      }
      break;
    }
  }
  return out;
}

double cdp_orthogonality_defect(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.ensemble != SimConfig::Ensemble::cdp)
    throw param_error("cdp_orthogonality_defect: ensemble must be cdp");
  Rng rng(cfg.seed);
  MatrixXcd a = cdp_matrix(rng, cfg.n, cfg.cdp_masks);
  MatrixXcd g = a.adjoint() * a;
  g -= MatrixXcd::Identity(cfg.n, cfg.n);
  return g.norm();
}

WllnReport wlln_report(const SimOutput& out, const std::vector<int>& orders) {
  for (int k : orders)
    if (k < 1 || k > 6) throw param_error("wlln_report: orders must be in 1..6");
  const double sigma = out.config.sigma;
  if (!(sigma > 0.0)) throw param_error("wlln_report: requires sigma > 0");
  const auto& y = out.y;
  const double m = static_cast<double>(y.size());
  WllnReport rep;
  for (int k : orders) {
    double s1 = 0.0, s2 = 0.0;
    for (double v : y) {
      const double p = std::pow(v, k);
      s1 += p;
      s2 += p * p;
    }
    WllnRow row;
    row.k = k;
    row.empirical = s1 / m;
    row.population = population_y_moment(k, sigma);
    row.gap = std::fabs(row.empirical - row.population);
    const double var = std::max(0.0, s2 / m - (s1 / m) * (s1 / m));
    row.tol = 4.0 * std::sqrt(var / m);
    row.pass = row.gap <= row.tol;
    rep.rows.push_back(row);
  }

  YMeasure pop = YMeasure::population(sigma);
  double sup = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double lambda = -1.0 + 0.1 * i;
    double emp = 0.0;
    for (double v : y) emp += log_z_texp({lambda, v, sigma});
    emp /= m;
    double popv = 0.0;
    for (std::size_t j = 0; j < pop.points().size(); ++j)
      popv += pop.weights()[j] * log_z_texp({lambda, pop.points()[j], sigma});
    sup = std::max(sup, std::fabs(emp - popv));
  }
  rep.logz_sup_gap = sup;
  rep.logz_pass = sup <= rep.logz_tol;
  return rep;
}

double overlap_law_check(std::int64_t n, std::int64_t trials, std::uint64_t seed) {
  if (n < 2) throw param_error("overlap_law_check: n must be >= 2");
  if (trials < 10000) throw param_error("overlap_law_check: trials must be >= 1e4");
  Rng rng(seed);
  std::vector<double> q2(trials);
  for (std::int64_t t = 0; t < trials; ++t) {
    VectorXcd x = uniform_unit(rng, n);
    VectorXcd xp = uniform_unit(rng, n);
    q2[t] = std::norm(x.dot(xp));
  }
  const double shape = static_cast<double>(n - 1);
  return ks_distance(std::move(q2), [shape](double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return 1.0 - std::pow(1.0 - t, shape);
  });
}

double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace haarpr
