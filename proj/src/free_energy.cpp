#include "haarpr/free_energy.hpp"

#include <algorithm>
#include <cmath>

#include "haarpr/errors.hpp"
#include "haarpr/quadrature.hpp"
#include "haarpr/special.hpp"
#include "haarpr/tilted.hpp"

namespace haarpr {

namespace {

double volume_terms(double q, const ModelParams& p) {
  return (1.0 - 1.0 / p.delta) * std::log1p(-q * q) +
         p.Delta * std::log1p(-0.5 * q * q);
}

// Chebyshev points on [0, q_max] including both endpoints, increasing.
std::vector<double> cheb_grid(const GridSpec& spec) {
  if (!(spec.points >= 8)) throw param_error("grid: need at least 8 points");
  if (!(spec.q_max > 0.0 && spec.q_max < 1.0))
    throw param_error("grid: q_max must be in (0,1)");
  std::vector<double> g(spec.points);
  for (int i = 0; i < spec.points; ++i) {
    const double x = std::cos(M_PI * (spec.points - 1 - i) / (spec.points - 1));
    g[i] = 0.5 * (x + 1.0) * spec.q_max;
  }
  g.front() = 0.0;
  g.back() = spec.q_max;
  return g;
}

const QuadratureRule& exp_rule() {
  static const QuadratureRule rule = gauss_laguerre(96);
  return rule;
}

double expect_exp1(const std::function<double(double)>& f) {
  const auto& rule = exp_rule();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

// stationarity residual q - E U r(phi U), U ~ Exp(1)
double zero_noise_gap(double phi, double q) {
  return q - expect_exp1([&](double u) { return u * bessel_ratio(phi * u); });
}

}  // namespace

void ModelParams::validate() const {
  if (!(sigma >= 0.0)) throw param_error("ModelParams: sigma must be >= 0");
  if (!(delta > 0.0)) throw param_error("ModelParams: delta must be > 0");
  if (!(Delta >= 0.0)) throw param_error("ModelParams: Delta must be >= 0");
}

ZeroNoiseXi2 zero_noise_xi2(double q) {
  if (!(q >= 0.0 && q < 1.0)) throw param_error("zero_noise_xi2: q must be in [0,1)");
  double lo = 0.0, hi = 1.0;
  ZeroNoiseXi2 out;
  if (zero_noise_gap(0.0, q) <= 0.0) {
    out.phi2 = 0.0;
  } else {
    while (zero_noise_gap(hi, q) > 0.0) {
      hi *= 2.0;
      if (hi > 1e9) throw accuracy_error("zero_noise_xi2: maximizer diverged");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (zero_noise_gap(mid, q) > 0.0 ? lo : hi) = mid;
      if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
    }
    out.phi2 = 0.5 * (lo + hi);
  }
  const double elog =
      expect_exp1([&](double u) { return log_bessel_i0(out.phi2 * u); });
  out.value = 2.0 + q * out.phi2 - elog;
  return out;
}

double zero_noise_xi2_second_derivative(double q) {
  const double phi2 = zero_noise_xi2(q).phi2;
  const double denom = expect_exp1([&](double u) {
    const double x = phi2 * u;
    double rp;
    if (x < 1e-6) {
      rp = 0.5;
    } else {
      const double r = bessel_ratio(x);
      rp = 1.0 - r * r - r / x;
    }
    return u * u * rp;
  });
  if (!(denom > 0.0))
    throw accuracy_error("zero_noise_xi2_second_derivative: degenerate stationarity");
  return 1.0 / denom;
}

bool zero_noise_f_increasing(double delta, double Delta,
                             const std::vector<double>& grid) {
  ModelParams p{0.0, delta, Delta};
  p.validate();
  double prev = -1e300;
  bool first = true;
  for (double q : grid) {
    if (!(q >= 0.0 && q < 1.0))
      throw param_error("zero_noise_f_increasing: grid point outside [0,1)");
    const double f = zero_noise_xi2(q).value + volume_terms(q, p);
    if (!first && !(f > prev)) return false;
    prev = f;
    first = false;
  }
  return true;
}

double free_energy(double q, const ModelParams& p, const YMeasure& measure) {
  p.validate();
  if (!(q >= 0.0 && q < 1.0)) throw param_error("free_energy: q must be in [0,1)");
  if (p.sigma == 0.0)
    return zero_noise_xi2(q).value - 2.0 + volume_terms(q, p);
  const double xi1 = solve_xi1(measure).value;
  const double xi2 = solve_xi2(q, measure).value;
  return xi2 - 2.0 * xi1 + volume_terms(q, p);
}

Xi2CurveData compute_xi2_curve(const YMeasure& measure, const GridSpec& spec) {
  Xi2CurveData data;
  data.grid = cheb_grid(spec);
  data.xi1 = solve_xi1(measure).value;
  data.xi2.resize(data.grid.size());
  data.lambda2.resize(data.grid.size());
  data.phi.resize(data.grid.size());
  std::optional<std::array<double, 2>> warm;
  for (std::size_t i = 0; i < data.grid.size(); ++i) {
    VariationalSolution sol = solve_xi2(data.grid[i], measure, warm);
    data.xi2[i] = sol.value;
    data.lambda2[i] = sol.argmax[0];
    data.phi[i] = sol.argmax[1];
    warm = std::array<double, 2>{sol.argmax[0], sol.argmax[1]};
  }
  data.xi2_dd0 = xi2_second_derivative(
      0.0, measure, std::array<double, 2>{data.lambda2[0], data.phi[0]});
  return data;
}

namespace {

FreeEnergyCurve curve_from_xi2(const Xi2CurveData& data, const ModelParams& p) {
  FreeEnergyCurve curve;
  curve.grid = data.grid;
  curve.xi2 = data.xi2;
  curve.lambda2 = data.lambda2;
  curve.phi = data.phi;
  curve.xi1 = data.xi1;
  curve.values.resize(data.grid.size());
  for (std::size_t i = 0; i < data.grid.size(); ++i)
    curve.values[i] =
        data.xi2[i] - 2.0 * data.xi1 + volume_terms(data.grid[i], p);
  if (std::fabs(curve.values[0]) > 1e-8)
    throw accuracy_error("free-energy curve: F(0) differs from 0");
  curve.curvature_at_zero =
      data.xi2_dd0 - 2.0 * (1.0 - 1.0 / p.delta) - p.Delta;
  curve.min_interior = 1e300;
  for (std::size_t i = 1; i < curve.values.size(); ++i)
    curve.min_interior = std::min(curve.min_interior, curve.values[i]);

  // tail certificate for q in (q_max, 1): Xi2 - 2 Xi1 >= -C - ln(1-q)/2 with
  // C calibrated on the outer grid points, against the volume terms
  const double coef = (2.0 - p.delta) / (2.0 * p.delta);
  double c_cal = 0.0;
  const std::size_t n = curve.grid.size();
  for (std::size_t i = n - n / 5; i < n; ++i) {
    const double q = curve.grid[i];
    c_cal = std::max(c_cal, -(curve.xi2[i] - 2.0 * curve.xi1) -
                                0.5 * std::log1p(-q));
  }
  c_cal += 0.5;
  const double qm = curve.grid.back();
  const double extras = std::min(0.0, (1.0 - 1.0 / p.delta) * std::log(2.0)) +
                        p.Delta * std::log(0.5);
  curve.tail_certified =
      coef > 0.0 && (-c_cal + coef * (-std::log1p(-qm)) + extras > 0.0);

  if (!(curve.curvature_at_zero > 0.0)) {
    curve.condition_holds = false;
    curve.fail_reason = "curvature_at_zero <= 0";
  } else if (!(curve.min_interior > 0.0)) {
    curve.condition_holds = false;
    curve.fail_reason = "interior minimum <= 0";
  } else if (!curve.tail_certified) {
    curve.condition_holds = false;
    curve.fail_reason = "tail positivity not certified";
  } else {
    curve.condition_holds = true;
  }
  return curve;
}

}  // namespace

FreeEnergyCurve check_condition(const ModelParams& p, const YMeasure& measure,
                                const GridSpec& spec) {
  p.validate();
  if (p.sigma == 0.0) {
    // zero-noise branch: Bessel route, no measure solves
    FreeEnergyCurve curve;
    curve.grid = cheb_grid(spec);
    curve.xi1 = 1.0;
    curve.values.resize(curve.grid.size());
    curve.xi2.resize(curve.grid.size());
    curve.lambda2.assign(curve.grid.size(), 1.0);
    curve.phi.resize(curve.grid.size());
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      ZeroNoiseXi2 zn = zero_noise_xi2(curve.grid[i]);
      curve.xi2[i] = zn.value;
      curve.phi[i] = zn.phi2;
      curve.values[i] = zn.value - 2.0 + volume_terms(curve.grid[i], p);
    }
    curve.curvature_at_zero = zero_noise_xi2_second_derivative(0.0) -
                              2.0 * (1.0 - 1.0 / p.delta) - p.Delta;
    curve.min_interior = 1e300;
    for (std::size_t i = 1; i < curve.values.size(); ++i)
      curve.min_interior = std::min(curve.min_interior, curve.values[i]);
    const double coef = (2.0 - p.delta) / (2.0 * p.delta);
    double c_cal = 0.0;
    const std::size_t n = curve.grid.size();
    for (std::size_t i = n - n / 5; i < n; ++i)
      c_cal = std::max(c_cal, -(curve.xi2[i] - 2.0) -
                                  0.5 * std::log1p(-curve.grid[i]));
    c_cal += 0.5;
    const double extras =
        std::min(0.0, (1.0 - 1.0 / p.delta) * std::log(2.0)) +
        p.Delta * std::log(0.5);
    curve.tail_certified =
        coef > 0.0 &&
        (-c_cal + coef * (-std::log1p(-curve.grid.back())) + extras > 0.0);
    if (!(curve.curvature_at_zero > 0.0)) {
      curve.fail_reason = "curvature_at_zero <= 0";
    } else if (!(curve.min_interior > 0.0)) {
      curve.fail_reason = "interior minimum <= 0";
    } else if (!curve.tail_certified) {
      curve.fail_reason = "tail positivity not certified";
    } else {
      curve.condition_holds = true;
    }
    return curve;
  }
  Xi2CurveData data = compute_xi2_curve(measure, spec);
  return curve_from_xi2(data, p);
}

double log_f_gauss(double q, const YMeasure& measure) {
  if (!(q >= 0.0 && q < 1.0)) throw param_error("log_f_gauss: q must be in [0,1)");
  const double sigma = measure.sigma();
  const double one_m_q2 = 1.0 - q * q;
  const double lambda_g = -q * q / one_m_q2;
  const double phi_g = 2.0 * q / one_m_q2;
  double acc = 0.0;
  const auto& pts = measure.points();
  const auto& wts = measure.weights();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double lnz2 = twis_terms({lambda_g, phi_g, pts[i], sigma}, false).log_z;
    const double lnp = log_y_density(pts[i], sigma);
    acc += wts[i] * std::exp(lnz2 - 2.0 * lnp - std::log(one_m_q2));
  }
  return std::log(acc);
}

double gaussian_baseline_F(double q, const ModelParams& p, const YMeasure& measure) {
  p.validate();
  return log_f_gauss(q, measure) + volume_terms(q, p);
}

namespace {

struct GaussCurveData {
  std::vector<double> grid;
  std::vector<double> lnfg;
  double curvature0 = 0.0;  // d^2 ln F_G / dq^2 at 0
};

GaussCurveData gauss_curve(const YMeasure& measure, double q_max, int points) {
  GaussCurveData d;
  GridSpec spec{points, q_max};
  d.grid = cheb_grid(spec);
  d.lnfg.resize(d.grid.size());
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    d.lnfg[i] = log_f_gauss(d.grid[i], measure);
  // symmetric in q, so the 5-point second derivative reduces to 3 evals
  const double h = 0.02;
  const double f0 = log_f_gauss(0.0, measure);
  const double f1 = log_f_gauss(h, measure);
  const double f2 = log_f_gauss(2.0 * h, measure);
  d.curvature0 = (-f2 + 16.0 * f1 - 15.0 * f0) / (6.0 * h * h);
  return d;
}

bool gauss_condition_holds(const GaussCurveData& d, const ModelParams& p) {
  if (p.delta > 1.0 + 1e-12) return false;  // exponent diverges to -inf at q->1
  const double curv = d.curvature0 - 2.0 * (1.0 - 1.0 / p.delta) - p.Delta;
  if (!(curv > 0.0)) return false;
  double min_int = 1e300;
  for (std::size_t i = 1; i < d.grid.size(); ++i)
    min_int = std::min(min_int,
                       d.lnfg[i] + (1.0 - 1.0 / p.delta) * std::log1p(-d.grid[i] * d.grid[i]) +
                           p.Delta * std::log1p(-0.5 * d.grid[i] * d.grid[i]));
  if (!(min_int > 0.0)) return false;
  // beyond the grid: ln F_G is nondecreasing in q and the delta-term is >= 0
  // for delta <= 1, so positivity persists when the margin beats Delta ln 2
  return d.lnfg.back() + p.Delta * std::log(0.5) > 0.0;
}

}  // namespace

ThresholdResult threshold_scan(double Delta, double sigma, double tol,
                               bool gaussian_baseline) {
  if (!(tol >= 1e-4)) throw param_error("threshold_scan: tol must be >= 1e-4");
  if (!(Delta >= 0.0)) throw param_error("threshold_scan: Delta must be >= 0");
  if (!(sigma > 0.0)) throw param_error("threshold_scan: sigma must be > 0");
  ThresholdResult res;
  res.sigma = sigma;
  res.Delta = Delta;
  res.gaussian = gaussian_baseline;
  res.tol = tol;

  YMeasure measure = YMeasure::population(sigma);
  double lo, hi;
  std::function<bool(double)> holds;
  GaussCurveData gdata;
  Xi2CurveData xdata;
  if (gaussian_baseline) {
    gdata = gauss_curve(measure, 0.9, 80);
    lo = 0.5;
    hi = 4.0;
    holds = [&](double delta) {
      ModelParams p{sigma, delta, Delta};
      return gauss_condition_holds(gdata, p);
    };
  } else {
    xdata = compute_xi2_curve(measure, GridSpec{200, 0.99});
    lo = 1.0;
    hi = 4.0;
    holds = [&](double delta) {
      ModelParams p{sigma, delta, Delta};
      return curve_from_xi2(xdata, p).condition_holds;
    };
  }
  if (!holds(lo) || holds(hi))
    throw scan_error("threshold_scan: no verdict sign change in scan interval");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  res.delta_star = 0.5 * (lo + hi);
  return res;
}

double laplace_check(const FreeEnergyCurve& curve, double m) {
  if (!curve.condition_holds)
    throw param_error("laplace_check: curve verdict must be condition-holds");
  if (!(m >= 100.0)) throw param_error("laplace_check: m must be >= 100");
  // fine trapezoid over a piecewise-linear interpolation of the curve
  const int n = 20000;
  const double qm = curve.grid.back();
  std::vector<double> logvals(n + 1), w(n + 1, qm / n);
  w.front() *= 0.5;
  w.back() *= 0.5;
  std::size_t seg = 0;
  for (int i = 0; i <= n; ++i) {
    const double q = qm * i / n;
    while (seg + 2 < curve.grid.size() && curve.grid[seg + 1] < q) ++seg;
    const double q0 = curve.grid[seg], q1 = curve.grid[seg + 1];
    const double f0 = curve.values[seg], f1 = curve.values[seg + 1];
    const double t = (q1 > q0) ? (q - q0) / (q1 - q0) : 0.0;
    logvals[i] = -m * (f0 + t * (f1 - f0));
  }
  double total = logsumexp_weighted(logvals, w);
  // the remaining (q_max, 1) chunk, bounded by its endpoint value
  const double tail = -m * curve.values.back() + std::log1p(-qm);
  total = std::max(total, tail) +
          std::log1p(std::exp(std::min(total, tail) - std::max(total, tail)));
  return total / m;
}

}  // namespace haarpr
