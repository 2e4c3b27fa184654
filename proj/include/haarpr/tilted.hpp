#pragma once

#include <cstdint>
#include <vector>

namespace haarpr {

// Exponential tilting of (|G|^2 reweighted by phi_sigma(. - y)): after
// completing the square the density is a normal N(mu, sigma^2) truncated to
// [0, inf) with mu = y + sigma^2 (lambda - 1).
struct TiltedExpParams {
  double lambda = 0.0;
  double y = 0.0;
  double sigma = 1.0;
  void validate() const;
  double mu() const { return y + sigma * sigma * (lambda - 1.0); }
};

// ln int_0^inf e^{-(1-lambda)u} phi_sigma(u-y) du, closed form.
double log_z_texp(const TiltedExpParams& p);
double texp_mean(const TiltedExpParams& p);
double texp_moment(const TiltedExpParams& p, int k);  // 0 <= k <= 6
double texp_variance(const TiltedExpParams& p);
std::vector<double> sample_texp(const TiltedExpParams& p, std::uint64_t seed,
                                std::size_t count);

// Three-parameter tilting of a rank-one 2x2 complex Wishart block in the
// coordinates (s, s', theta).
struct TiltedWishartParams {
  double lambda = 0.0;
  double phi = 0.0;
  double y = 0.0;
  double sigma = 1.0;
  void validate() const;
};

// One pass over the (s,s') quadrature grid: the log normalizer, and when
// requested the means and 2x2 covariance of the sufficient statistics
// (s + s', sqrt(s s') cos theta). The theta integrals are collapsed to
// I0/I1 factors.
struct TwisTerms {
  double log_z = 0.0;
  double mean_sum = 0.0;    // E (s + s')
  double mean_cross = 0.0;  // E sqrt(s s') cos theta
  double h11 = 0.0;         // Var(s + s')
  double h12 = 0.0;         // Cov(s + s', sqrt(s s') cos theta)
  double h22 = 0.0;         // Var(sqrt(s s') cos theta)
};
TwisTerms twis_terms(const TiltedWishartParams& p, bool with_moments);

// Public normalizer with an internal refinement check; throws accuracy_error
// when refinement does not settle.
double log_z_twis(const TiltedWishartParams& p);

struct WishartMomentBlock {
  double mean_diag = 0.0;  // E S11 = E S22
  double mean_off = 0.0;   // E Re S12; E Im S12 = 0
  double cov[4][4] = {};   // vec order (S11, S22, Re S12, Im S12)
  double min_cov_eigenvalue() const;
};
WishartMomentBlock twis_moments(const TiltedWishartParams& p);

struct TwisSample {
  double s, sp, theta;
};
// Exact i.i.d. rejection sampler (AM-GM envelope over the cos coupling).
std::vector<TwisSample> sample_twis(const TiltedWishartParams& p,
                                    std::uint64_t seed, std::size_t count);

// Snapshot of the (s,s') grid: nodes, joint probabilities, coupling values.
// Consumed by the characteristic-function inversion machinery.
struct TwisGrid {
  std::vector<double> s;             // N nodes
  std::vector<double> prob;          // N*N row-major, sums to 1
  std::vector<double> sqss;          // N*N sqrt(s_i s_j)
  std::vector<double> kappa;         // N*N |phi| sqrt(s_i s_j)
  std::vector<double> log_i0_kappa;  // N*N
  double log_z = 0.0;
};
TwisGrid twis_grid(const TiltedWishartParams& p);

}  // namespace haarpr
