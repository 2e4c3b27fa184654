#include "haarpr/tilted.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "haarpr/errors.hpp"
#include "haarpr/kernels.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/special.hpp"

namespace haarpr {

namespace {

void require_finite_params(double lambda, double y, double sigma, const char* who) {
  if (!std::isfinite(lambda) || !std::isfinite(y) || !std::isfinite(sigma))
    throw param_error(std::string(who) + ": non-finite parameter");
  if (!(sigma > 0.0)) throw param_error(std::string(who) + ": sigma must be > 0");
}

constexpr double kLog2Pi = 1.8378770664093454836;

// ---- 1-d tilted-exponential helpers ---------------------------------------

// hazard phi(c)/Phi(-c), stable for all c
double upper_mills(double c) { return norm_mills(-c); }

// Standard normal tail-moment ratios J_j = I_j(c)/I_0(c),
// I_j(c) = int_c^inf z^j phi(z) dz. Recursion J_j = c^{j-1} h + (j-1) J_{j-2}.
void tail_moment_ratios(double c, int kmax, double* out) {
  const double h = upper_mills(c);
  out[0] = 1.0;
  if (kmax >= 1) out[1] = h;
  double cpow = 1.0;  // c^{j-1}
  for (int j = 2; j <= kmax; ++j) {
    cpow *= c;
    out[j] = cpow * h + (j - 1) * out[j - 2];
  }
}

double binom6(int n, int k) {
  static const double table[7][7] = {
      {1, 0, 0, 0, 0, 0, 0},      {1, 1, 0, 0, 0, 0, 0},
      {1, 2, 1, 0, 0, 0, 0},      {1, 3, 3, 1, 0, 0, 0},
      {1, 4, 6, 4, 1, 0, 0},      {1, 5, 10, 10, 5, 1, 0},
      {1, 6, 15, 20, 15, 6, 1}};
  return table[n][k];
}

// truncated-tail quadrature path for strongly truncated parameters
double texp_moment_quad(const TiltedExpParams& p, int k) {
  static const QuadratureRule lag = gauss_laguerre(64);
  const double mu = p.mu(), sigma = p.sigma;
  const double slope = -mu / (sigma * sigma);  // > 0 here
  std::vector<double> base(lag.size()), num(lag.size());
  for (std::size_t i = 0; i < lag.size(); ++i) {
    const double s = lag.nodes[i] / slope;
    const double d = (s - mu) / sigma;
    base[i] = lag.nodes[i] - 0.5 * d * d;
    num[i] = base[i] + k * std::log(s);
  }
  return std::exp(logsumexp_weighted(num, lag.weights) -
                  logsumexp_weighted(base, lag.weights));
}

}  // namespace

void TiltedExpParams::validate() const {
  require_finite_params(lambda, y, sigma, "TiltedExpParams");
}

void TiltedWishartParams::validate() const {
  require_finite_params(lambda, y, sigma, "TiltedWishartParams");
  if (!std::isfinite(phi)) throw param_error("TiltedWishartParams: non-finite phi");
}

double log_z_texp(const TiltedExpParams& p) {
  p.validate();
  const double g = p.lambda - 1.0;
  return g * p.y + 0.5 * g * g * p.sigma * p.sigma +
         log_norm_cdf(p.y / p.sigma + p.sigma * g);
}

double texp_moment(const TiltedExpParams& p, int k) {
  p.validate();
  if (k < 0) throw param_error("texp_moment: k < 0");
  if (k > 6) throw param_error("texp_moment: moment order capped at 6");
  if (k == 0) return 1.0;
  const double mu = p.mu(), sigma = p.sigma;
  const double c = -mu / sigma;  // standardized truncation point
  if (c > 8.0) return texp_moment_quad(p, k);
  double j[7];
  tail_moment_ratios(c, k, j);
  double acc = 0.0, mupow[7], sigpow[7];
  mupow[0] = sigpow[0] = 1.0;
  for (int i = 1; i <= k; ++i) {
    mupow[i] = mupow[i - 1] * mu;
    sigpow[i] = sigpow[i - 1] * sigma;
  }
  for (int i = 0; i <= k; ++i)
    acc += binom6(k, i) * mupow[k - i] * sigpow[i] * j[i];
  return acc;
}

double texp_mean(const TiltedExpParams& p) {
  p.validate();
  const double mu = p.mu(), sigma = p.sigma;
  const double c = -mu / sigma;
  if (c > 8.0) return texp_moment_quad(p, 1);
  return mu + sigma * upper_mills(c);
}

double texp_variance(const TiltedExpParams& p) {
  p.validate();
  const double mu = p.mu(), sigma = p.sigma;
  const double c = -mu / sigma;
  if (c > 100.0) {
    const double s2 = sigma * sigma;
    return s2 / (c * c);
  }
  const double h = upper_mills(c);
  return sigma * sigma * (1.0 + c * h - h * h);
}

std::vector<double> sample_texp(const TiltedExpParams& p, std::uint64_t seed,
                                std::size_t count) {
  p.validate();
  if (count < 1) throw param_error("sample_texp: count must be >= 1");
  const double mu = p.mu(), sigma = p.sigma;
  const double a = -mu / sigma;  // sample standardized z >= a
  Rng rng(seed);
  std::vector<double> out(count);
  if (a <= 8.0) {
    const double tail = norm_cdf(-a);  // P(z >= a)
    for (std::size_t i = 0; i < count; ++i) {
      const double v = rng.next_double();
      const double z = -norm_quantile(v * tail);
      out[i] = std::max(0.0, mu + sigma * z);
    }
  } else {
    // Robert's translated-exponential rejection for deep truncation
    const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (std::size_t i = 0; i < count; ++i) {
      for (;;) {
        const double z = a - std::log(rng.next_double()) / alpha;
        const double d = z - alpha;
        if (std::log(rng.next_double()) <= -0.5 * d * d) {
          out[i] = std::max(0.0, mu + sigma * z);
          break;
        }
      }
    }
  }
  return out;
}

// ---- tilted Wishart (s,s') machinery ---------------------------------------

namespace {

struct Grid {
  std::vector<double> s;     // N nodes
  std::vector<double> logw;  // per-node log measure weight
};

// d/dx of I1/I0 via the identity r' = 1 - r^2 - r/x
double ratio_derivative(double x) {
  if (x < 1e-6) return 0.5;
  const double r = bessel_ratio(x);
  return 1.0 - r * r - r / x;
}

Grid build_grid(double mu, double sigma, double aphi, double widen, int n_panel) {
  Grid grid;
  if (mu / sigma >= -3.0) {
    // Gaussian-window regime, coordinates t = (s - mu)/sigma
    const double t_lo = -mu / sigma;
    auto slope = [&](double t) {
      const double s = std::max(0.0, mu + sigma * t);
      return -2.0 * t + aphi * sigma * bessel_ratio(aphi * s);
    };
    double tstar = t_lo;
    if (slope(t_lo) > 0.0) {
      double lo = t_lo, hi = std::max(t_lo + 1e-9, 0.5 * aphi * sigma + 1.0);
      for (int it = 0; it < 24; ++it) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
      }
      tstar = 0.5 * (lo + hi);
    }
    const double sstar = std::max(0.0, mu + sigma * tstar);
    const double curv =
        2.0 - aphi * sigma * aphi * sigma * ratio_derivative(aphi * sstar);
    double w = (8.5 + widen) * std::max(1.0, std::sqrt(2.0 / std::max(curv, 0.2)));
    const double lo = std::max(t_lo, tstar - w), hi = tstar + w;
    QuadratureRule rule = composite_legendre(lo, hi, 6.0, n_panel);
    grid.s.resize(rule.size());
    grid.logw.resize(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double t = rule.nodes[i];
      grid.s[i] = std::max(0.0, mu + sigma * t);
      grid.logw[i] = std::log(rule.weights[i]) - 0.5 * t * t - 0.5 * kLog2Pi;
    }
  } else {
    // exponential-tail regime: mass pinned against s = 0
    static const QuadratureRule lag64 = gauss_laguerre(64);
    static const QuadratureRule lag96 = gauss_laguerre(96);
    const QuadratureRule& lag = widen > 0 ? lag96 : lag64;
    const double slope = -mu / (sigma * sigma);
    grid.s.resize(lag.size());
    grid.logw.resize(lag.size());
    for (std::size_t i = 0; i < lag.size(); ++i) {
      const double s = lag.nodes[i] / slope;
      const double d = (s - mu) / sigma;
      grid.s[i] = s;
      grid.logw[i] = std::log(lag.weights[i]) + lag.nodes[i] - std::log(slope) -
                     0.5 * d * d - 0.5 * std::log(2.0 * M_PI * sigma * sigma);
    }
  }
  return grid;
}

struct Workspace {
  std::vector<double> e, p, sq, kap, k0, r, w, pr, pw, c;
};

TwisTerms twis_terms_impl(const TiltedWishartParams& p, bool with_moments,
                          double widen, int n_panel) {
  const double gamma = p.lambda - 1.0;
  const double mu = p.y + gamma * p.sigma * p.sigma;
  const double aphi = std::fabs(p.phi);
  const double sgn = p.phi < 0 ? -1.0 : 1.0;
  const Grid grid = build_grid(mu, p.sigma, aphi, widen, n_panel);
  const std::size_t n = grid.s.size(), nn = n * n;

  thread_local Workspace ws;
  ws.e.resize(nn);
  ws.sq.resize(nn);
  ws.kap.resize(nn);
  ws.k0.resize(nn);
  ws.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) ws.c[i] = std::sqrt(grid.s[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const double ci = ws.c[i];
    double* sq = ws.sq.data() + i * n;
    double* kap = ws.kap.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      sq[j] = ci * ws.c[j];
      kap[j] = aphi * sq[j];
    }
  }
  const auto& kn = kernels::active();
  kn.vlog_i0(ws.kap.data(), ws.k0.data(), nn);
  for (std::size_t i = 0; i < n; ++i) {
    const double li = grid.logw[i];
    double* e = ws.e.data() + i * n;
    const double* k0 = ws.k0.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) e[j] = li + grid.logw[j] + k0[j];
  }
  const double m = kn.vmax(ws.e.data(), nn);
  ws.p.resize(nn);
  kn.vexp(ws.e.data(), ws.p.data(), nn, m);
  double ssum = 0.0;
  for (double v : ws.p) ssum += v;

  TwisTerms out;
  out.log_z = 2.0 * gamma * p.y + gamma * gamma * p.sigma * p.sigma + m +
              std::log(ssum);
  if (!with_moments) return out;

  const double inv = 1.0 / ssum;
  for (double& v : ws.p) v *= inv;
  ws.r.resize(nn);
  ws.w.resize(nn);
  kn.vi0_ratio(ws.kap.data(), ws.r.data(), ws.w.data(), nn);
  ws.pr.resize(nn);
  ws.pw.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    ws.pr[i] = ws.p[i] * ws.r[i];
    ws.pw[i] = ws.p[i] * ws.w[i];
  }

  // row reductions; everything else follows from the exchange symmetry
  double es = 0, es2 = 0, ess = 0, ex = 0, esx = 0, essw = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double si = grid.s[i], ci = ws.c[i];
    const double* prow = ws.p.data() + i * n;
    double rowsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) rowsum += prow[j];
    const double rowps = kn.dot(prow, grid.s.data(), n);
    const double rowprc = kn.dot(ws.pr.data() + i * n, ws.c.data(), n);
    const double rowpws = kn.dot(ws.pw.data() + i * n, grid.s.data(), n);
    es += si * rowsum;
    es2 += si * si * rowsum;
    ess += si * rowps;
    ex += ci * rowprc;
    esx += si * ci * rowprc;
    essw += si * rowpws;
  }
  const double ess_cos2 = ess - essw;

  out.mean_sum = 2.0 * es;
  out.mean_cross = sgn * ex;
  out.h11 = 2.0 * (es2 - es * es) + 2.0 * (ess - es * es);
  out.h12 = sgn * 2.0 * (esx - es * ex);
  out.h22 = ess_cos2 - ex * ex;
  return out;
}

}  // namespace

TwisTerms twis_terms(const TiltedWishartParams& p, bool with_moments) {
  p.validate();
  return twis_terms_impl(p, with_moments, 0.0, 20);
}

double log_z_twis(const TiltedWishartParams& p) {
  p.validate();
  const double base = twis_terms_impl(p, false, 0.0, 20).log_z;
  const double fine = twis_terms_impl(p, false, 3.0, 32).log_z;
  if (std::fabs(base - fine) > 1e-8 * std::max(1.0, std::fabs(base))) {
    const double finer = twis_terms_impl(p, false, 6.0, 40).log_z;
    if (std::fabs(fine - finer) > 1e-8 * std::max(1.0, std::fabs(fine)))
      throw accuracy_error("log_z_twis: quadrature refinement did not converge");
    return finer;
  }
  return fine;
}

WishartMomentBlock twis_moments(const TiltedWishartParams& p) {
  p.validate();
  const double gamma = p.lambda - 1.0;
  const double mu = p.y + gamma * p.sigma * p.sigma;
  const double aphi = std::fabs(p.phi);
  const double sgn = p.phi < 0 ? -1.0 : 1.0;
  const Grid grid = build_grid(mu, p.sigma, aphi, 0.0, 20);
  const std::size_t n = grid.s.size(), nn = n * n;

  std::vector<double> e(nn), kap(nn), k0(nn), prob(nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      kap[i * n + j] = aphi * std::sqrt(grid.s[i] * grid.s[j]);
  const auto& kn = kernels::active();
  kn.vlog_i0(kap.data(), k0.data(), nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      e[i * n + j] = grid.logw[i] + grid.logw[j] + k0[i * n + j];
  const double m = kn.vmax(e.data(), nn);
  kn.vexp(e.data(), prob.data(), nn, m);
  double ssum = std::accumulate(prob.begin(), prob.end(), 0.0);
  for (double& v : prob) v /= ssum;

  std::vector<double> r(nn), w(nn);
  kn.vi0_ratio(kap.data(), r.data(), w.data(), nn);

  double es = 0, es2 = 0, ess = 0, ex = 0, esx = 0, ecos2 = 0, esin2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t ij = i * n + j;
      const double pij = prob[ij], si = grid.s[i], sj = grid.s[j];
      const double sq = std::sqrt(si * sj);
      es += pij * si;
      es2 += pij * si * si;
      ess += pij * si * sj;
      ex += pij * sq * r[ij];
      esx += pij * si * sq * r[ij];
      ecos2 += pij * si * sj * (1.0 - w[ij]);
      esin2 += pij * si * sj * w[ij];
    }

  WishartMomentBlock out;
  out.mean_diag = es;
  out.mean_off = sgn * ex;
  const double c11 = es2 - es * es;
  const double c12 = ess - es * es;
  const double c13 = sgn * (esx - es * ex);
  const double c33 = ecos2 - ex * ex;
  const double c44 = esin2;
  const double cov[4][4] = {{c11, c12, c13, 0.0},
                            {c12, c11, c13, 0.0},
                            {c13, c13, c33, 0.0},
                            {0.0, 0.0, 0.0, c44}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.cov[i][j] = cov[i][j];
  return out;
}

double WishartMomentBlock::min_cov_eigenvalue() const {
  Eigen::Matrix4d c;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) c(i, j) = cov[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(c);
  return es.eigenvalues().minCoeff();
}

TwisGrid twis_grid(const TiltedWishartParams& p) {
  p.validate();
  const double gamma = p.lambda - 1.0;
  const double mu = p.y + gamma * p.sigma * p.sigma;
  const double aphi = std::fabs(p.phi);
  const Grid grid = build_grid(mu, p.sigma, aphi, 0.0, 20);
  const std::size_t n = grid.s.size(), nn = n * n;
  TwisGrid out;
  out.s = grid.s;
  out.sqss.resize(nn);
  out.kappa.resize(nn);
  out.log_i0_kappa.resize(nn);
  out.prob.resize(nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.sqss[i * n + j] = std::sqrt(grid.s[i] * grid.s[j]);
      out.kappa[i * n + j] = aphi * out.sqss[i * n + j];
    }
  const auto& kn = kernels::active();
  kn.vlog_i0(out.kappa.data(), out.log_i0_kappa.data(), nn);
  std::vector<double> e(nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      e[i * n + j] = grid.logw[i] + grid.logw[j] + out.log_i0_kappa[i * n + j];
  const double m = kn.vmax(e.data(), nn);
  kn.vexp(e.data(), out.prob.data(), nn, m);
  const double ssum = std::accumulate(out.prob.begin(), out.prob.end(), 0.0);
  for (double& v : out.prob) v /= ssum;
  out.log_z = 2.0 * gamma * p.y + gamma * gamma * p.sigma * p.sigma + m +
              std::log(ssum);
  return out;
}

std::vector<TwisSample> sample_twis(const TiltedWishartParams& p,
                                    std::uint64_t seed, std::size_t count) {
  p.validate();
  if (count < 1) throw param_error("sample_twis: count must be >= 1");
  const double aphi = std::fabs(p.phi);
  // proposal marginals: Texp with the AM-GM tilt shift
  TiltedExpParams prop{p.lambda + 0.5 * aphi, p.y, p.sigma};
  const double mu = prop.mu(), sigma = p.sigma;
  const double a = -mu / sigma;
  const double tail = norm_cdf(-a);
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  Rng rng(seed);
  auto draw_tn = [&]() {
    if (a <= 8.0) {
      const double v = rng.next_double();
      const double z = -norm_quantile(v * tail);
      return std::max(0.0, mu + sigma * z);
    }
    for (;;) {
      const double z = a - std::log(rng.next_double()) / alpha;
      const double d = z - alpha;
      if (std::log(rng.next_double()) <= -0.5 * d * d)
        return std::max(0.0, mu + sigma * z);
    }
  };
  std::vector<TwisSample> out;
  out.reserve(count);
  const std::size_t max_tries = 20000 * count + 1000000;
  std::size_t tries = 0;
  while (out.size() < count) {
    if (++tries > max_tries)
      throw accuracy_error("sample_twis: rejection acceptance too low");
    const double s = draw_tn(), sp = draw_tn();
    const double theta = (2.0 * rng.next_double() - 1.0) * M_PI;
    const double logacc =
        p.phi * std::sqrt(s * sp) * std::cos(theta) - 0.5 * aphi * (s + sp);
    if (std::log(rng.next_double()) <= logacc) out.push_back({s, sp, theta});
  }
  return out;
}

}  // namespace haarpr
