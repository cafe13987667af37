#pragma once

#include <functional>

#include <Eigen/Core>

namespace kvbeam {

/// A finite Chebyshev expansion sum_k c_k T_k(xi) on [-1, 1].
///
/// Coefficients are stored densely from index 0, so `coeffs.size() - 1` is
/// the degree.
struct ChebSeries {
  Eigen::VectorXd coeffs;

  ChebSeries() = default;
  explicit ChebSeries(Eigen::VectorXd c) : coeffs(std::move(c)) {}

  /// Series with a single unit coefficient at index k.
  static ChebSeries unit(int k);

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double coeff(int k) const {
    return (k >= 0 && k < coeffs.size()) ? coeffs[k] : 0.0;
  }
};

/// Chebyshev-Gauss quadrature with weight (1 - xi^2)^(-1/2).
///
/// An N-node rule integrates polynomials up to degree 2N - 1 exactly.
struct ChebGaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  explicit ChebGaussRule(int node_count);

  double integrate(const std::function<double(double)>& f) const;
};

/// Clenshaw evaluation. Throws std::domain_error if |xi| > 1.
double cheb_eval(const ChebSeries& series, double xi);

/// Basis function phi_k = T_k - 2(k+2)/(k+3) T_{k+2} + (k+1)/(k+3) T_{k+4}.
/// It satisfies phi_k(+-1) = phi_k'(+-1) = 0.
ChebSeries phi_series(int k);

/// Exact Chebyshev coefficients of the derivative.
ChebSeries cheb_differentiate(const ChebSeries& series);

/// Degree-n interpolant through the n+1 Chebyshev-Gauss points.
ChebSeries cheb_interpolate(const std::function<double(double)>& f, int n);

/// ||T_k||_w^2: pi for k = 0, pi/2 otherwise.
double cheb_norm_sq(int k);

/// <f, g>_w computed exactly from orthogonality of the T_k.
double weighted_inner_product(const ChebSeries& f, const ChebSeries& g);

}  // namespace kvbeam
