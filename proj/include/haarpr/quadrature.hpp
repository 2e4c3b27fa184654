#pragma once

#include <functional>
#include <vector>

namespace haarpr {

// A positive quadrature rule. 1-d kinds keep nodes strictly increasing;
// tensor_2d stores flattened (nodes, nodes2) pairs.
struct QuadratureRule {
  enum class Kind { half_line_exponential, full_line_gaussian, bounded_interval, tensor_2d };
  Kind kind = Kind::bounded_interval;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> nodes2;  // tensor_2d only

  std::size_t size() const { return nodes.size(); }
  // reference mass = integral of 1 against the rule's reference weight
  void validate(double reference_mass, double tol = 1e-12) const;
};

// weight e^{-u} on [0, inf); weights sum to 1
QuadratureRule gauss_laguerre(int n);
// weight = standard normal density; weights sum to 1
QuadratureRule gauss_hermite_prob(int n);
// weight 1 on [a, b]
QuadratureRule gauss_legendre(int n, double a, double b);
// [a, b] split into panels of width <= panel_width, n-point Gauss per panel
QuadratureRule composite_legendre(double a, double b, double panel_width, int n_per_panel);

QuadratureRule tensor_product(const QuadratureRule& a, const QuadratureRule& b);

// log( sum_i w_i exp(v_i) ) with a max shift; empty input -> -inf
double logsumexp_weighted(const std::vector<double>& logvals,
                          const std::vector<double>& weights);

// integral over the rule of exp(log_f); rule weights must carry the full
// measure (bounded_interval panels)
double integrate_log(const QuadratureRule& rule,
                     const std::function<double(double)>& log_f);

// int_0^inf exp(log_h(u)) du. 96-node Gauss-Laguerre first; falls back to an
// adaptive composite-panel sweep when the tail check detects that the
// integrand's effective support exceeds the node range.
double integrate_half_line_log(const std::function<double(double)>& log_h,
                               double rel_tol = 1e-11);

}  // namespace haarpr
