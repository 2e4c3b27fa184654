#pragma once

#include <cstdint>
#include <vector>

#include "haarpr/tilted.hpp"

namespace haarpr {

// Density of sum_i u_i, u_i ~ Texp(lambda, y_i), on a uniform grid. The
// first two components enter through their exact closed-form convolution;
// the rest by Simpson-weighted lattice convolution.
struct SumDensityGrid {
  double x0 = 0.0;  // grid origin
  double h = 0.0;
  std::vector<double> f;
  double at(double x) const;  // cubic interpolation, 0 outside
};
SumDensityGrid texp_sum_density(const std::vector<TiltedExpParams>& comps);

// ln L(y) for m = 2 by direct quadrature of the conditional representation
// (u uniform on [0,2] given the unit-sum constraint).
double script_l_direct_log(double y1, double y2, double sigma);

// ln L(y) through the change-of-measure representation: the sum density of
// the tilted components at the conditioning point, Stirling factors through
// lgamma, and the product of normalizers. m = y.size() <= 64.
double script_l_via_tilt_log(const std::vector<double>& y, double lambda,
                             double sigma);

struct Clt1dReport {
  double lambda1 = 0.0;
  double v_hat = 0.0;
  double predicted = 0.0;       // 1/sqrt(2 pi v_hat m)
  double estimated = 0.0;       // exact-kernel density estimate at m
  double estimate_se = 0.0;
  double rel_gap = 0.0;
  double sum_mean = 0.0;        // E sum u_i (should be ~ m)
  double sum_mean_se = 0.0;
  bool mean_pass = false;       // |sum_mean - m| <= 4 se
  bool inconclusive = false;    // kernel-grid accuracy check failed
};
Clt1dReport local_clt_error_1d(double sigma, std::int64_t m, std::int64_t trials,
                               std::uint64_t seed);

struct Clt4dReport {
  double lambda2 = 0.0, phi = 0.0;
  double mean[4] = {0, 0, 0, 0};       // of vec(sum S - mQ)/sqrt(m)
  double mean_se[4] = {0, 0, 0, 0};
  double cov_rel_gap = 0.0;            // operator-norm gap to V_hat
  double density_est = 0.0;
  double density_pred = 0.0;           // (2 pi)^{-2} det(V_hat)^{-1/2}
  double density_rel_gap = 0.0;
  double pair_mean = 0.0;              // E(s + s') over all draws
  double pair_mean_se = 0.0;
  bool mean_pass = false;
};
Clt4dReport local_clt_error_4d(double sigma, double q, std::int64_t m,
                               std::int64_t trials, std::uint64_t seed);

// Reconstruction of ln U(y, Q) through the representation formula at two
// tilt choices; the sum density at the conditioning point is obtained by
// 4-d characteristic-function inversion on a truncated lattice.
struct Lemma5Check {
  double log_u_untilted = 0.0;   // (lambda, phi) = (0, 0)
  double log_u_tilted = 0.0;     // (lambda, phi) = empirical argmax
  double boundary_max = 0.0;     // max |prod psi| on the lattice boundary
};
Lemma5Check lemma5_normalizer_check(const std::vector<double>& y, double sigma,
                                    double q);

// ln U at one tilt (exposed for tests).
double log_u_via_tilt(const std::vector<double>& y, double sigma, double q,
                      double lambda, double phi, double* boundary_max = nullptr);

}  // namespace haarpr
