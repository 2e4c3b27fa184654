#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "haarpr/y_model.hpp"

namespace haarpr {

struct SimConfig {
  enum class Ensemble { haar, haar_explicit, cdp, gaussian };
  std::int64_t n = 0;
  double delta = 1.0;        // m = ceil(delta * n); for cdp m = L * n
  double sigma = 0.0;
  Ensemble ensemble = Ensemble::haar;
  int cdp_masks = 0;         // L; required for cdp
  std::uint64_t seed = 0;
  void validate() const;
  std::int64_t m() const;
};

struct SimOutput {
  std::vector<double> y;
  SimConfig config;
  YMeasure to_measure() const;  // requires sigma > 0
};

// Sample the measurement model. The haar ensemble draws y directly from the
// marginal law m|U|^2 + sigma*eps with U a normalized complex Gaussian
// vector (no m x n matrix is materialized); haar_explicit and cdp build the
// sensing matrix, gaussian uses the exact i.i.d. law of the projected
// entries.
SimOutput simulate(const SimConfig& cfg);

// ||A^H A - I||_F for the CDP matrix of a config (built fresh from the seed).
double cdp_orthogonality_defect(const SimConfig& cfg);

struct WllnRow {
  int k = 0;
  double empirical = 0.0;
  double population = 0.0;
  double gap = 0.0;
  double tol = 0.0;  // 4 standard errors
  bool pass = false;
};
struct WllnReport {
  std::vector<WllnRow> rows;
  double logz_sup_gap = 0.0;  // sup over |lambda|<=1 of the log-normalizer gap
  double logz_tol = 0.01;
  bool logz_pass = false;
};
WllnReport wlln_report(const SimOutput& out, const std::vector<int>& orders);

// KS distance of |x^H x'|^2 over `trials` independent uniform unit pairs to
// the Beta(1, n-1) law.
double overlap_law_check(std::int64_t n, std::int64_t trials, std::uint64_t seed);

// Kolmogorov-Smirnov statistics (samples are copied and sorted).
double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& cdf);
double two_sample_ks(std::vector<double> a, std::vector<double> b);

}  // namespace haarpr
