#pragma once

#include <string>
#include <vector>

#include "haarpr/variational.hpp"
#include "haarpr/y_model.hpp"

namespace haarpr {

struct ModelParams {
  double sigma = 0.0;   // 0 selects the zero-noise branch
  double delta = 1.0;   // sampling ratio m/n
  double Delta = 0.0;   // side-information rate
  void validate() const;
};

struct FreeEnergyCurve {
  std::vector<double> grid;     // strictly increasing, grid[0] = 0
  std::vector<double> values;   // F at each q
  std::vector<double> xi2;      // Xi2(q) (or its Gaussian analog ln F_G(q))
  std::vector<double> lambda2;  // argmax lambda (0 for Gaussian analog)
  std::vector<double> phi;      // argmax phi (0 for Gaussian analog)
  double xi1 = 0.0;
  double curvature_at_zero = 0.0;
  double min_interior = 0.0;
  bool condition_holds = false;
  std::string fail_reason;      // empty when the condition holds
  bool tail_certified = false;  // positivity beyond the grid certified
};

struct GridSpec {
  int points = 200;       // Chebyshev-spaced on [0, q_max], endpoint-densified
  double q_max = 0.99;
};

// F(q) = Xi2(q;sigma) - 2 Xi1(sigma) + (1 - 1/delta) ln(1-q^2)
//       + Delta ln(1 - q^2/2); sigma = 0 dispatches to the Bessel branch.
double free_energy(double q, const ModelParams& p, const YMeasure& measure);

// Evaluate F over a grid with warm-started solves; verdict per the
// weak-recovery condition (min interior > 0 and F''(0) > 0), with an
// analytic tail certificate past q_max.
FreeEnergyCurve check_condition(const ModelParams& p, const YMeasure& measure,
                                const GridSpec& grid = {});

// delta-independent Xi data reused across a threshold bisection.
struct Xi2CurveData {
  std::vector<double> grid;
  std::vector<double> xi2;
  std::vector<double> lambda2;
  std::vector<double> phi;
  double xi1 = 0.0;
  double xi2_dd0 = 0.0;  // d^2 Xi2/dq^2 at q=0
};
Xi2CurveData compute_xi2_curve(const YMeasure& measure, const GridSpec& grid = {});

struct ThresholdResult {
  double delta_star = 0.0;
  double sigma = 0.0;
  double Delta = 0.0;
  bool gaussian = false;
  double tol = 0.0;
};
// Bisection over delta in [1,4] ([0.5,4] for the Gaussian baseline) on the
// weak-recovery verdict; the Xi curves are computed once and reused.
ThresholdResult threshold_scan(double Delta, double sigma, double tol,
                               bool gaussian_baseline = false);

// Zero-noise objects (Bessel route).
struct ZeroNoiseXi2 {
  double value = 0.0;  // Xi2(q;0)
  double phi2 = 0.0;   // maximizer
};
ZeroNoiseXi2 zero_noise_xi2(double q);
double zero_noise_xi2_second_derivative(double q);
bool zero_noise_f_increasing(double delta, double Delta,
                             const std::vector<double>& grid);

// ln F_Gauss(q) for the i.i.d.-sensing analog, and the full exponent
// ln F_Gauss + volume terms.
double log_f_gauss(double q, const YMeasure& measure);
double gaussian_baseline_F(double q, const ModelParams& p, const YMeasure& measure);

// (1/m) ln int_0^1 exp(-m F(q)) dq over an evaluated curve.
double laplace_check(const FreeEnergyCurve& curve, double m);

}  // namespace haarpr
