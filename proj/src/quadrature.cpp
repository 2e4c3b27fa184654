#include "haarpr/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "haarpr/errors.hpp"
#include "haarpr/kernels.hpp"

namespace haarpr {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// beta0 * (first eigenvector component)^2.
QuadratureRule golub_welsch(const std::vector<double>& diag,
                            const std::vector<double>& offdiag, double beta0,
                            QuadratureRule::Kind kind) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) t(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) t(i, i + 1) = t(i + 1, i) = offdiag[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  QuadratureRule rule;
  rule.kind = kind;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = beta0 * v0 * v0;
  }
  return rule;
}

}  // namespace

void QuadratureRule::validate(double reference_mass, double tol) const {
  for (double w : weights)
    if (!(w > 0.0)) throw accuracy_error("quadrature rule: non-positive weight");
  if (kind != Kind::tensor_2d) {
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i] > nodes[i - 1]))
        throw accuracy_error("quadrature rule: nodes not strictly increasing");
  }
  double mass = 0.0;
  for (double w : weights) mass += w;
  if (std::fabs(mass - reference_mass) > tol * std::fabs(reference_mass))
    throw accuracy_error("quadrature rule: reference mass mismatch");
}

QuadratureRule gauss_laguerre(int n) {
  std::vector<double> d(n), e(n - 1);
  for (int i = 0; i < n; ++i) d[i] = 2.0 * i + 1.0;
  for (int i = 1; i < n; ++i) e[i - 1] = static_cast<double>(i);
  return golub_welsch(d, e, 1.0, QuadratureRule::Kind::half_line_exponential);
}

QuadratureRule gauss_hermite_prob(int n) {
  std::vector<double> d(n, 0.0), e(n - 1);
  for (int i = 1; i < n; ++i) e[i - 1] = std::sqrt(static_cast<double>(i));
  return golub_welsch(d, e, 1.0, QuadratureRule::Kind::full_line_gaussian);
}

namespace {

// cached [-1,1] rules; Golub-Welsch is far too slow to run per integrand
const QuadratureRule& legendre_unit(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> d(n, 0.0), e(n - 1);
  for (int i = 1; i < n; ++i) {
    const double k = static_cast<double>(i);
    e[i - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  QuadratureRule rule =
      golub_welsch(d, e, 2.0, QuadratureRule::Kind::bounded_interval);
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule rule = legendre_unit(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadratureRule composite_legendre(double a, double b, double panel_width,
                                  int n_per_panel) {
  if (!(b > a)) throw param_error("composite_legendre: empty interval");
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel_width)));
  const double w = (b - a) / panels;
  QuadratureRule base = gauss_legendre(n_per_panel, 0.0, w);
  QuadratureRule rule;
  rule.kind = QuadratureRule::Kind::bounded_interval;
  rule.nodes.reserve(panels * n_per_panel);
  rule.weights.reserve(panels * n_per_panel);
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * w;
    for (int i = 0; i < n_per_panel; ++i) {
      rule.nodes.push_back(lo + base.nodes[i]);
      rule.weights.push_back(base.weights[i]);
    }
  }
  return rule;
}

QuadratureRule tensor_product(const QuadratureRule& a, const QuadratureRule& b) {
  QuadratureRule rule;
  rule.kind = QuadratureRule::Kind::tensor_2d;
  rule.nodes.reserve(a.size() * b.size());
  rule.nodes2.reserve(a.size() * b.size());
  rule.weights.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      rule.nodes.push_back(a.nodes[i]);
      rule.nodes2.push_back(b.nodes[j]);
      rule.weights.push_back(a.weights[i] * b.weights[j]);
    }
  return rule;
}

double logsumexp_weighted(const std::vector<double>& logvals,
                          const std::vector<double>& weights) {
  if (logvals.empty()) return -std::numeric_limits<double>::infinity();
  const auto& k = kernels::active();
  const double m = k.vmax(logvals.data(), logvals.size());
  if (!std::isfinite(m)) return m;
  std::vector<double> ex(logvals.size());
  k.vexp(logvals.data(), ex.data(), logvals.size(), m);
  const double s = k.dot(ex.data(), weights.data(), ex.size());
  return m + std::log(s);
}

double integrate_log(const QuadratureRule& rule,
                     const std::function<double(double)>& log_f) {
  std::vector<double> lv(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    lv[i] = log_f(rule.nodes[i]);
    if (std::isnan(lv[i]))
      throw integrand_error("integrate_log: integrand returned NaN", rule.nodes[i]);
  }
  return logsumexp_weighted(lv, rule.weights);
}

double integrate_half_line_log(const std::function<double(double)>& log_h,
                               double rel_tol) {
  static const QuadratureRule lag = gauss_laguerre(96);
  const std::size_t n = lag.size();
  std::vector<double> lv(n);
  for (std::size_t i = 0; i < n; ++i) {
    // fold the e^{+u} compensation into the log values
    lv[i] = log_h(lag.nodes[i]) + lag.nodes[i];
    if (std::isnan(lv[i]))
      throw integrand_error("integrate_half_line_log: NaN integrand", lag.nodes[i]);
  }
  const double total = logsumexp_weighted(lv, lag.weights);
  // tail check: contribution of the last decile of nodes
  const std::size_t cut = n - n / 10;
  std::vector<double> tail_lv(lv.begin() + cut, lv.end());
  std::vector<double> tail_w(lag.weights.begin() + cut, lag.weights.end());
  const double tail = logsumexp_weighted(tail_lv, tail_w);
  if (std::isfinite(total) && tail - total < std::log(1e-8)) return total;

  // adaptive fallback: extend the range until doubling it stops mattering,
  // then refine the panel order until that stops mattering too
  auto eval = [&](double b, int n_per_panel) {
    QuadratureRule rule =
        composite_legendre(0.0, b, std::max(b / 128.0, 1e-3), n_per_panel);
    return integrate_log(rule, log_h);
  };
  double b = 64.0;
  int n_per_panel = 16;
  for (int depth = 0; depth < 14; ++depth) {
    const double v1 = eval(b, n_per_panel);
    const double v2 = eval(2.0 * b, n_per_panel);
    if (std::isfinite(v1) && std::isfinite(v2) &&
        std::fabs(v2 - v1) <= rel_tol * std::max(1.0, std::fabs(v2))) {
      const double v3 = eval(2.0 * b, n_per_panel + 8);
      if (std::fabs(v3 - v2) <= rel_tol * std::max(1.0, std::fabs(v3)))
        return v3;
      n_per_panel += 8;
    } else {
      b *= 2.0;
    }
  }
  throw accuracy_error("integrate_half_line_log: adaptive refinement did not converge");
}

}  // namespace haarpr
