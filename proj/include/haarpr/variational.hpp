#pragma once

#include <array>
#include <optional>
#include <vector>

#include "haarpr/y_model.hpp"

namespace haarpr {

// Solution record for the concave tilt-parameter problems.
struct VariationalSolution {
  double value = 0.0;
  std::vector<double> argmax;            // 1 entry (lambda) or 2 (lambda, phi)
  std::vector<double> hessian;           // row-major, of the potential
  double residual = 0.0;                 // gradient norm at exit
  int iterations = 0;
  std::vector<double> bracket;           // [lo, hi] or [lo_l, hi_l, lo_p, hi_p]
  void check_invariants() const;         // residual/interior/definiteness
};

// max_lambda ( lambda - E_Y ln Z_texp(lambda, Y) )
VariationalSolution solve_xi1(const YMeasure& measure);

// max_(lambda,phi) ( 2 lambda + q phi - E_Y ln Z_twis(lambda, phi, Y) );
// warm-started from `warm` when given.
VariationalSolution solve_xi2(double q, const YMeasure& measure,
                              const std::optional<std::array<double, 2>>& warm = {});

// d^2 Xi2 / dq^2 at the optimizer: e2^T H^{-1} e2 with H the 2x2 Hessian of
// (lambda,phi) -> E_Y ln Z_twis at the argmax (positive definite).
double xi2_second_derivative(double q, const YMeasure& measure,
                             const std::optional<std::array<double, 2>>& warm = {});

// Potential evaluators, exposed for tests and the free-energy module.
double xi1_potential(double lambda, const YMeasure& measure);
double xi2_potential(double lambda, double phi, double q, const YMeasure& measure);

}  // namespace haarpr
