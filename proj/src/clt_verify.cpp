#include "haarpr/clt_verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "haarpr/errors.hpp"
#include "haarpr/kernels.hpp"
#include "haarpr/parallel.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/simulator.hpp"
#include "haarpr/special.hpp"
#include "haarpr/variational.hpp"
#include "haarpr/y_model.hpp"
#include "kernels/quantile_core.hpp"

namespace haarpr {

namespace {

using Complex = std::complex<double>;

double tn_normalizer(double mu, double sigma) { return norm_cdf(mu / sigma); }

double tn_pdf(double u, double mu, double sigma, double z) {
  if (u < 0.0) return 0.0;
  const double t = (u - mu) / sigma;
  return std::exp(-0.5 * t * t) / (sigma * std::sqrt(2.0 * M_PI) * z);
}

// exact convolution of two [0,inf)-truncated normals sharing sigma
double tn_pair_pdf(double x, double mu1, double mu2, double sigma, double z1,
                   double z2) {
  if (x <= 0.0) return 0.0;
  const double c = 0.5 * (mu1 + x - mu2);
  const double s = sigma * M_SQRT1_2;
  const double d = x - mu1 - mu2;
  const double gauss =
      std::exp(-0.25 * d * d / (sigma * sigma)) / (2.0 * sigma * std::sqrt(M_PI));
  const double mass = norm_cdf((x - c) / s) - norm_cdf(-c / s);
  return std::max(0.0, gauss * mass / (z1 * z2));
}

}  // namespace

double SumDensityGrid::at(double x) const {
  const double u = (x - x0) / h;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(f.size());
  if (n < 4 || u < 0.0 || u > static_cast<double>(n - 1)) return 0.0;
  std::ptrdiff_t i = static_cast<std::ptrdiff_t>(std::floor(u));
  i = std::max<std::ptrdiff_t>(1, std::min(i, n - 3));
  const double t = u - static_cast<double>(i);
  const double fm1 = f[i - 1], f0 = f[i], f1 = f[i + 1], f2 = f[i + 2];
  const double a = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double b = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double c = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double d = (t + 1.0) * t * (t - 1.0) / 6.0;
  return std::max(0.0, a * fm1 + b * f0 + c * f1 + d * f2);
}

SumDensityGrid texp_sum_density(const std::vector<TiltedExpParams>& comps) {
  const std::size_t m = comps.size();
  if (m < 2) throw param_error("texp_sum_density: need at least 2 components");
  if (m > 64) throw param_error("texp_sum_density: m capped at 64");
  const double sigma = comps[0].sigma;
  for (const auto& c : comps) {
    c.validate();
    if (c.sigma != sigma)
      throw param_error("texp_sum_density: components must share sigma");
  }

  std::vector<double> mu(m), z(m);
  double mean_sum = 0.0, var_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mu[i] = comps[i].mu();
    z[i] = tn_normalizer(mu[i], sigma);
    mean_sum += texp_mean(comps[i]);
    var_sum += texp_variance(comps[i]);
  }

  SumDensityGrid grid;
  grid.h = sigma / 40.0;
  const double hi = mean_sum + 12.0 * std::sqrt(var_sum) + 10.0 * sigma;
  grid.x0 = 0.0;
  std::size_t n = static_cast<std::size_t>(std::ceil(hi / grid.h)) + 2;
  if (n > (1u << 16)) {
    n = 1u << 16;
    grid.h = hi / static_cast<double>(n - 1);
  }
  grid.f.assign(n, 0.0);

  for (std::size_t j = 0; j < n; ++j)
    grid.f[j] = tn_pair_pdf(grid.h * j, mu[0], mu[1], sigma, z[0], z[1]);

  std::vector<double> kernel, next(n);
  const auto& kn = kernels::active();
  for (std::size_t i = 2; i < m; ++i) {
    const double lo = std::max(0.0, mu[i] - 8.0 * sigma);
    const double hi_k = mu[i] + 8.0 * sigma;
    const std::size_t k0 = static_cast<std::size_t>(std::floor(lo / grid.h));
    std::size_t k1 = static_cast<std::size_t>(std::ceil(hi_k / grid.h));
    if ((k1 - k0) % 2 == 1) ++k1;
    const std::size_t klen = k1 - k0 + 1;
    // Simpson weights folded into the reversed kernel
    kernel.assign(klen, 0.0);
    for (std::size_t k = 0; k < klen; ++k) {
      const double w = (k == 0 || k == klen - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      kernel[klen - 1 - k] =
          w * (grid.h / 3.0) * tn_pdf(grid.h * (k0 + k), mu[i], sigma, z[i]);
    }
    std::fill(next.begin(), next.end(), 0.0);
    parallel_blocks(n, [&](std::size_t b, std::size_t e, int) {
      for (std::size_t j = b; j < e; ++j) {
        const std::ptrdiff_t top =
            static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(k0);
        if (top < 0) continue;
        const std::size_t kmax =
            std::min<std::size_t>(klen, static_cast<std::size_t>(top) + 1);
        // sum_k kernel_rev[klen-1-k] f[top-k] = dot over aligned slices
        const double* fbase = grid.f.data() + (top - (kmax - 1));
        const double* krev = kernel.data() + (klen - kmax);
        next[j] = kn.dot(fbase, krev, kmax);
      }
    });
    grid.f.swap(next);
  }

  const double mass =
      std::accumulate(grid.f.begin(), grid.f.end(), 0.0) * grid.h;
  if (!(std::fabs(mass - 1.0) < 1e-4))
    throw accuracy_error("texp_sum_density: grid mass drifted to " +
                         std::to_string(mass));
  return grid;
}

double script_l_direct_log(double y1, double y2, double sigma) {
  if (!(sigma > 0.0)) throw param_error("script_l_direct: sigma must be > 0");
  QuadratureRule rule =
      composite_legendre(0.0, 2.0, std::min(0.5, 4.0 * sigma), 24);
  std::vector<double> lv(rule.size());
  const double lnorm = -std::log(2.0 * M_PI * sigma * sigma);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double u = rule.nodes[i];
    const double a = (y1 - u) / sigma, b = (y2 - (2.0 - u)) / sigma;
    lv[i] = lnorm - 0.5 * (a * a + b * b);
  }
  return std::log(0.5) + logsumexp_weighted(lv, rule.weights);
}

double script_l_via_tilt_log(const std::vector<double>& y, double lambda,
                             double sigma) {
  const std::size_t m = y.size();
  if (m < 2 || m > 64) throw param_error("script_l_via_tilt: need 2 <= m <= 64");
  std::vector<TiltedExpParams> comps(m);
  double logz_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    comps[i] = {lambda, y[i], sigma};
    logz_sum += log_z_texp(comps[i]);
  }
  SumDensityGrid grid = texp_sum_density(comps);
  const double fm = grid.at(static_cast<double>(m));
  if (!(fm > 1e-300))
    throw accuracy_error(
        "script_l_via_tilt: sum density underflow at the conditioning point");
  const double md = static_cast<double>(m);
  return std::lgamma(md) + md * (1.0 - lambda) + std::log(fm) -
         (md - 1.0) * std::log(md) + logz_sum;
}

// ---- 1-d local CLT experiment ----------------------------------------------

Clt1dReport local_clt_error_1d(double sigma, std::int64_t m, std::int64_t trials,
                               std::uint64_t seed) {
  if (m < 100) throw param_error("local_clt_error_1d: m must be >= 100");
  if (trials < 1000000)
    throw param_error("local_clt_error_1d: trials must be >= 1e6");
  if (!(sigma > 0.0)) throw param_error("local_clt_error_1d: sigma must be > 0");

  SimConfig cfg;
  cfg.n = std::max<std::int64_t>(2, m / 2);
  cfg.delta = static_cast<double>(m) / static_cast<double>(cfg.n);
  cfg.sigma = sigma;
  cfg.ensemble = SimConfig::Ensemble::haar;
  cfg.seed = seed;
  SimOutput sim = simulate(cfg);

  YMeasure emp = sim.to_measure();
  const double lambda1 = solve_xi1(emp).argmax[0];

  Clt1dReport rep;
  rep.lambda1 = lambda1;
  double vhat = 0.0;
  for (double yy : sim.y) vhat += texp_variance({lambda1, yy, sigma});
  vhat /= static_cast<double>(m);
  rep.v_hat = vhat;
  rep.predicted = 1.0 / std::sqrt(2.0 * M_PI * vhat * static_cast<double>(m));

  // estimator kernel: exact convolved density of the last K components
  const std::int64_t kcomp = std::min<std::int64_t>(64, m / 4);
  std::vector<TiltedExpParams> kparams;
  for (std::int64_t i = m - kcomp; i < m; ++i)
    kparams.push_back({lambda1, sim.y[i], sigma});
  SumDensityGrid gk = texp_sum_density(kparams);
  double kernel_mean = 0.0;
  for (const auto& p : kparams) kernel_mean += texp_mean(p);

  // kernel-grid sanity: half-size kernel against its own CLT value
  {
    std::vector<TiltedExpParams> half(kparams.begin(),
                                      kparams.begin() + kparams.size() / 2);
    SumDensityGrid coarse = texp_sum_density(half);
    double hm = 0.0, hv = 0.0;
    for (const auto& p : half) {
      hm += texp_mean(p);
      hv += texp_variance(p);
    }
    const double probe = coarse.at(hm);
    const double clt = 1.0 / std::sqrt(2.0 * M_PI * hv);
    if (!(probe > 0.0) || std::fabs(probe - clt) / clt > 0.25)
      rep.inconclusive = true;
  }

  const std::int64_t nsamp = m - kcomp;
  std::vector<double> mu(nsamp), tail(nsamp);
  for (std::int64_t i = 0; i < nsamp; ++i) {
    TiltedExpParams p{lambda1, sim.y[i], sigma};
    mu[i] = p.mu();
    tail[i] = norm_cdf(mu[i] / sigma);
  }

  const std::int64_t chunk = 1 << 15;
  const std::int64_t nchunks = (trials + chunk - 1) / chunk;
  struct Acc {
    double d = 0, d2 = 0, p = 0, p2 = 0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(nchunks));
  const auto& kn = kernels::active();
  parallel_blocks(
      static_cast<std::size_t>(nchunks),
      [&](std::size_t b, std::size_t e, int) {
        std::vector<double> sum(chunk), u(chunk), qv(chunk);
        for (std::size_t c = b; c < e; ++c) {
          const std::int64_t t0 = static_cast<std::int64_t>(c) * chunk;
          const std::int64_t tn = std::min<std::int64_t>(chunk, trials - t0);
          std::fill(sum.begin(), sum.begin() + tn, 0.0);
          for (std::int64_t i = 0; i < nsamp; ++i) {
            Rng rng(seed ^ 0x51ce5a1dULL,
                    c * static_cast<std::size_t>(nsamp) + i);
            const double ti = tail[i];
            for (std::int64_t t = 0; t < tn; ++t)
              u[t] = rng.next_double() * ti;
            kn.vnorm_quantile(u.data(), qv.data(), static_cast<std::size_t>(tn));
            const double mui = mu[i];
            for (std::int64_t t = 0; t < tn; ++t) sum[t] += mui - sigma * qv[t];
          }
          Acc a;
          for (std::int64_t t = 0; t < tn; ++t) {
            const double p = sum[t];
            const double d = gk.at(static_cast<double>(m) - p);
            a.d += d;
            a.d2 += d * d;
            a.p += p;
            a.p2 += p * p;
          }
          acc[c] = a;
        }
      });
  Acc tot;
  for (const auto& a : acc) {
    tot.d += a.d;
    tot.d2 += a.d2;
    tot.p += a.p;
    tot.p2 += a.p2;
  }
  const double tN = static_cast<double>(trials);
  rep.estimated = tot.d / tN;
  rep.estimate_se = std::sqrt(
      std::max(0.0, tot.d2 / tN - rep.estimated * rep.estimated) / tN);
  rep.rel_gap = std::fabs(rep.estimated - rep.predicted) / rep.predicted;
  const double pmean = tot.p / tN;
  const double pvar = std::max(0.0, tot.p2 / tN - pmean * pmean);
  rep.sum_mean = pmean + kernel_mean;
  rep.sum_mean_se = std::sqrt(pvar / tN);
  rep.mean_pass = std::fabs(rep.sum_mean - static_cast<double>(m)) <=
                  4.0 * std::max(rep.sum_mean_se, 1e-12);
  return rep;
}

// ---- 4-d local CLT experiment ----------------------------------------------

Clt4dReport local_clt_error_4d(double sigma, double q, std::int64_t m,
                               std::int64_t trials, std::uint64_t seed) {
  if (m < 500) throw param_error("local_clt_error_4d: m must be >= 500");
  if (trials < 10000000)
    throw param_error("local_clt_error_4d: trials must be >= 1e7");
  if (!(q >= 0.0 && q < 1.0)) throw param_error("local_clt_error_4d: bad q");
  if (!(sigma > 0.0)) throw param_error("local_clt_error_4d: sigma must be > 0");

  SimConfig cfg;
  cfg.n = std::max<std::int64_t>(2, m / 2);
  cfg.delta = static_cast<double>(m) / static_cast<double>(cfg.n);
  cfg.sigma = sigma;
  cfg.ensemble = SimConfig::Ensemble::haar;
  cfg.seed = seed;
  SimOutput sim = simulate(cfg);
  YMeasure emp = sim.to_measure();
  VariationalSolution sol = solve_xi2(q, emp);
  const double lambda2 = sol.argmax[0], phi = sol.argmax[1];

  Clt4dReport rep;
  rep.lambda2 = lambda2;
  rep.phi = phi;

  Eigen::Matrix4d vhat = Eigen::Matrix4d::Zero();
  for (double yy : sim.y) {
    WishartMomentBlock blk = twis_moments({lambda2, phi, yy, sigma});
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) vhat(a, b) += blk.cov[a][b];
  }
  vhat /= static_cast<double>(m);

  const double aphi = std::fabs(phi);
  std::vector<double> pmu(m), ptail(m), palpha(m);
  for (std::int64_t i = 0; i < m; ++i) {
    TiltedExpParams prop{lambda2 + 0.5 * aphi, sim.y[i], sigma};
    pmu[i] = prop.mu();
    const double a = -pmu[i] / sigma;
    ptail[i] = norm_cdf(-a);
    palpha[i] = 0.5 * (a + std::sqrt(a * a + 4.0));
  }

  const double md = static_cast<double>(m);
  const double x0[4] = {md, md, md * q, 0.0};
  const double sqm = std::sqrt(md);
  double band[4];
  for (int d = 0; d < 4; ++d)
    band[d] = std::pow(4.0 / 6.0, 1.0 / 8.0) *
              std::pow(static_cast<double>(trials), -1.0 / 8.0) *
              std::sqrt(vhat(d, d));

  const std::int64_t chunk = 1 << 12;
  const std::int64_t nchunks = (trials + chunk - 1) / chunk;
  struct Acc {
    double sw[4] = {0, 0, 0, 0};
    double swc[10] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    double kde = 0.0;
    double pair = 0.0, pair2 = 0.0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(nchunks));
  parallel_blocks(
      static_cast<std::size_t>(nchunks),
      [&](std::size_t b, std::size_t e, int) {
        std::vector<double> v0(chunk), v1(chunk), v2(chunk), v3(chunk);
        for (std::size_t c = b; c < e; ++c) {
          const std::int64_t t0 = static_cast<std::int64_t>(c) * chunk;
          const std::int64_t tn = std::min<std::int64_t>(chunk, trials - t0);
          std::fill(v0.begin(), v0.begin() + tn, 0.0);
          std::fill(v1.begin(), v1.begin() + tn, 0.0);
          std::fill(v2.begin(), v2.begin() + tn, 0.0);
          std::fill(v3.begin(), v3.begin() + tn, 0.0);
          Acc a;
          for (std::int64_t i = 0; i < m; ++i) {
            Rng r(seed ^ 0x4d7715caULL, c * static_cast<std::size_t>(m) + i);
            const double mui = pmu[i], taili = ptail[i], alphai = palpha[i];
            const double ai = -mui / sigma;
            auto draw = [&]() {
              if (ai <= 8.0) {
                const double z =
                    -qcore::norm_quantile_raw(r.next_double() * taili);
                return std::max(0.0, mui + sigma * z);
              }
              for (;;) {
                const double z = ai - std::log(r.next_double()) / alphai;
                const double dd = z - alphai;
                if (std::log(r.next_double()) <= -0.5 * dd * dd)
                  return std::max(0.0, mui + sigma * z);
              }
            };
            for (std::int64_t t = 0; t < tn; ++t) {
              double s, sp, th;
              for (;;) {
                s = draw();
                sp = draw();
                th = (2.0 * r.next_double() - 1.0) * M_PI;
                const double logacc = phi * std::sqrt(s * sp) * std::cos(th) -
                                      0.5 * aphi * (s + sp);
                if (std::log(r.next_double()) <= logacc) break;
              }
              const double cross = std::sqrt(s * sp);
              v0[t] += s;
              v1[t] += sp;
              v2[t] += cross * std::cos(th);
              v3[t] += cross * std::sin(th);
              const double both = s + sp;
              a.pair += both;
              a.pair2 += both * both;
            }
          }
          for (std::int64_t t = 0; t < tn; ++t) {
            const double w[4] = {(v0[t] - x0[0]) / sqm, (v1[t] - x0[1]) / sqm,
                                 (v2[t] - x0[2]) / sqm, (v3[t] - x0[3]) / sqm};
            int idx = 0;
            for (int d = 0; d < 4; ++d) {
              a.sw[d] += w[d];
              for (int d2 = d; d2 < 4; ++d2) a.swc[idx++] += w[d] * w[d2];
            }
            double kv = 1.0;
            for (int d = 0; d < 4; ++d) kv *= norm_pdf(w[d] / band[d]) / band[d];
            a.kde += kv;
          }
          acc[c] = a;
        }
      });

  Acc tot;
  for (const auto& a : acc) {
    for (int d = 0; d < 4; ++d) tot.sw[d] += a.sw[d];
    for (int i = 0; i < 10; ++i) tot.swc[i] += a.swc[i];
    tot.kde += a.kde;
    tot.pair += a.pair;
    tot.pair2 += a.pair2;
  }
  const double tN = static_cast<double>(trials);
  Eigen::Matrix4d second = Eigen::Matrix4d::Zero();
  {
    int idx = 0;
    for (int d = 0; d < 4; ++d)
      for (int d2 = d; d2 < 4; ++d2) {
        second(d, d2) = second(d2, d) = tot.swc[idx++] / tN;
      }
  }
  Eigen::Vector4d meanv;
  for (int d = 0; d < 4; ++d) meanv(d) = tot.sw[d] / tN;
  Eigen::Matrix4d cov = second - meanv * meanv.transpose();
  for (int d = 0; d < 4; ++d) {
    rep.mean[d] = meanv(d);
    rep.mean_se[d] = std::sqrt(std::max(0.0, cov(d, d)) / tN);
  }
  const Eigen::Matrix4d diff = cov - vhat;
  rep.cov_rel_gap = diff.operatorNorm() / vhat.operatorNorm();
  rep.density_est = tot.kde / tN;
  rep.density_pred = 1.0 / (4.0 * M_PI * M_PI * std::sqrt(vhat.determinant()));
  rep.density_rel_gap =
      std::fabs(rep.density_est - rep.density_pred) / rep.density_pred;
  const double draws = tN * md;
  rep.pair_mean = tot.pair / draws;
  const double pvar =
      std::max(0.0, tot.pair2 / draws - rep.pair_mean * rep.pair_mean);
  rep.pair_mean_se = std::sqrt(pvar / draws);
  rep.mean_pass = std::fabs(rep.pair_mean - 2.0) <=
                  4.0 * std::max(rep.pair_mean_se, 1e-12);
  return rep;
}

// ---- representation identity for the pair integral --------------------------

namespace {

struct CompCf {
  TwisGrid grid;
  Eigen::MatrixXcd emat;  // N x NT1, e^{i T1_a s_j}
};

}  // namespace

double log_u_via_tilt(const std::vector<double>& y, double sigma, double q,
                      double lambda, double phi, double* boundary_max) {
  const std::size_t m = y.size();
  if (m < 3 || m > 8) throw param_error("log_u_via_tilt: need 3 <= m <= 8");
  if (!(q > 0.0 && q < 1.0)) throw param_error("log_u_via_tilt: q in (0,1)");
  if (!(sigma > 0.0)) throw param_error("log_u_via_tilt: sigma must be > 0");

  const double md = static_cast<double>(m);
  const double x0[4] = {md, md, md * q, 0.0};

  // component grids + aggregate mean/covariance for lattice sizing
  std::vector<CompCf> comps(m);
  double mean[4] = {0, 0, 0, 0};
  double var[4] = {0, 0, 0, 0};
  double logz_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    TiltedWishartParams p{lambda, phi, y[i], sigma};
    comps[i].grid = twis_grid(p);
    logz_sum += comps[i].grid.log_z;
    WishartMomentBlock blk = twis_moments(p);
    mean[0] += blk.mean_diag;
    mean[1] += blk.mean_diag;
    mean[2] += blk.mean_off;
    for (int d = 0; d < 4; ++d) var[d] += blk.cov[d][d];
  }

  // lattice: spacing from the alias period (effective support diameter),
  // extent from the characteristic-function decay
  double hstep[4], bmax[4];
  int npts[4];
  for (int d = 0; d < 4; ++d) {
    const double sd = std::sqrt(var[d]);
    const double gap = std::fabs(x0[d] - mean[d]);
    const double period = 12.0 * sd + 2.0 * gap + 4.0;
    hstep[d] = 2.0 * M_PI / period;
    const double bgauss = std::sqrt(90.0 / var[d]);
    bmax[d] = (d < 2) ? bgauss : std::max(bgauss, 28.0);
    npts[d] = 2 * static_cast<int>(std::ceil(bmax[d] / hstep[d])) + 1;
  }
  if (static_cast<long long>(npts[0]) * npts[1] > 40000 ||
      static_cast<long long>(npts[2]) * npts[3] > 4000000)
    throw accuracy_error("log_u_via_tilt: lattice size guard tripped");

  // T1/T2 share a grid (marginals are exchangeable)
  const int n1 = std::max(npts[0], npts[1]);
  const double h1 = std::min(hstep[0], hstep[1]);
  std::vector<double> t1(n1);
  for (int a = 0; a < n1; ++a) t1[a] = (a - (n1 - 1) / 2) * h1;

  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ns = comps[i].grid.s.size();
    comps[i].emat.resize(ns, n1);
    for (std::size_t j = 0; j < ns; ++j)
      for (int a = 0; a < n1; ++a)
        comps[i].emat(j, a) = std::polar(1.0, t1[a] * comps[i].grid.s[j]);
  }

  std::vector<Complex> ph1(n1);
  for (int a = 0; a < n1; ++a) ph1[a] = std::polar(1.0, -t1[a] * x0[0]);

  const int n3 = npts[2];
  const int n4half = (npts[3] - 1) / 2 + 1;  // t4 >= 0, even integrand
  std::vector<double> t3g(n3);
  for (int a = 0; a < n3; ++a) t3g[a] = (a - (n3 - 1) / 2) * hstep[2];

  std::vector<double> partial_sum(n3, 0.0), partial_bound(n3, 0.0);
  parallel_blocks(static_cast<std::size_t>(n3), [&](std::size_t b, std::size_t e,
                                                    int) {
    Eigen::MatrixXcd mbuf, psi;
    Eigen::MatrixXcd prod(n1, n1);
    for (std::size_t i3 = b; i3 < e; ++i3) {
      const double t3 = t3g[i3];
      double local = 0.0, localb = 0.0;
      for (int i4 = 0; i4 < n4half; ++i4) {
        const double t4 = i4 * hstep[3];
        const Complex cphi(phi, t3);
        const Complex zeta = std::sqrt(cphi * cphi - Complex(t4 * t4, 0.0));
        prod.setConstant(Complex(1.0, 0.0));
        for (std::size_t i = 0; i < m; ++i) {
          const auto& g = comps[i].grid;
          const std::size_t ns = g.s.size();
          mbuf.resize(ns, ns);
          for (std::size_t j = 0; j < ns; ++j)
            for (std::size_t k = 0; k < ns; ++k) {
              const std::size_t jk = j * ns + k;
              const Complex li0 = log_bessel_i0_complex(zeta * g.sqss[jk]);
              mbuf(j, k) = g.prob[jk] *
                           std::exp(li0 - Complex(g.log_i0_kappa[jk], 0.0));
            }
          psi = comps[i].emat.transpose() * mbuf * comps[i].emat;
          prod = prod.cwiseProduct(psi);
        }
        // reduce over (T1, T2) with the x0 phases
        Complex red(0.0, 0.0);
        for (int a2 = 0; a2 < n1; ++a2) {
          Complex col(0.0, 0.0);
          for (int a = 0; a < n1; ++a) col += ph1[a] * prod(a, a2);
          red += col * ph1[a2];  // x0[1] = x0[0]
        }
        const Complex phase34 = std::polar(1.0, -t3 * x0[2] - t4 * x0[3]);
        const double weight = (i4 == 0) ? 1.0 : 2.0;
        local += weight * (red * phase34).real();
        const bool shell = (i3 == 0 || i3 + 1 == static_cast<std::size_t>(n3) ||
                            i4 + 1 == n4half);
        if (shell) {
          double mx = 0.0;
          for (int a = 0; a < n1; ++a)
            for (int a2 = 0; a2 < n1; ++a2)
              mx = std::max(mx, std::abs(prod(a, a2)));
          localb = std::max(localb, mx);
        }
      }
      partial_sum[i3] = local;
      partial_bound[i3] = localb;
    }
  });
  double total = 0.0, bound = 0.0;
  for (int i3 = 0; i3 < n3; ++i3) {
    total += partial_sum[i3];
    bound = std::max(bound, partial_bound[i3]);
  }
  if (boundary_max) *boundary_max = bound;

  const double hprod = h1 * h1 * hstep[2] * hstep[3];
  const double hval = total * hprod / std::pow(2.0 * M_PI, 4);
  if (!(hval > 0.0))
    throw accuracy_error("log_u_via_tilt: inversion returned non-positive density");

  // U = e^{-m lambda tr Q - m phi Re Q12} prod Z * H(mQ) / H0(mQ), with H0
  // the complex-Wishart density of the untilted sum at mQ
  const double trq = 2.0, req12 = q, detq = 1.0 - q * q;
  const double log_h0 = (2.0 * md - 4.0) * std::log(md) +
                        (md - 2.0) * std::log(detq) - md * trq - std::log(M_PI) -
                        std::lgamma(md) - std::lgamma(md - 1.0);
  return -md * lambda * trq - md * phi * req12 + logz_sum + std::log(hval) -
         log_h0;
}

Lemma5Check lemma5_normalizer_check(const std::vector<double>& y, double sigma,
                                    double q) {
  YMeasure emp = YMeasure::empirical(y, sigma);
  VariationalSolution sol = solve_xi2(q, emp);
  Lemma5Check out;
  double b0 = 0.0, b1 = 0.0;
  out.log_u_untilted = log_u_via_tilt(y, sigma, q, 0.0, 0.0, &b0);
  out.log_u_tilted =
      log_u_via_tilt(y, sigma, q, sol.argmax[0], sol.argmax[1], &b1);
  out.boundary_max = std::max(b0, b1);
  return out;
}

}  // namespace haarpr
