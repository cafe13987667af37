#include "kvbeam/chebyshev.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kvbeam {

using std::numbers::pi;

ChebSeries ChebSeries::unit(int k) {
  if (k < 0) throw std::invalid_argument("ChebSeries::unit: negative index");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 1);
  c[k] = 1.0;
  return ChebSeries(std::move(c));
}

ChebGaussRule::ChebGaussRule(int node_count) {
  if (node_count < 1) {
    throw std::invalid_argument("ChebGaussRule: node count must be positive");
  }
  nodes.resize(node_count);
  weights.setConstant(node_count, pi / node_count);
  for (int j = 0; j < node_count; ++j) {
    nodes[j] = std::cos(pi * (2.0 * j + 1.0) / (2.0 * node_count));
  }
}

double ChebGaussRule::integrate(const std::function<double(double)>& f) const {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < nodes.size(); ++j) sum += weights[j] * f(nodes[j]);
  return sum;
}

double cheb_eval(const ChebSeries& series, double xi) {
  if (!(std::abs(xi) <= 1.0)) {
    throw std::domain_error("cheb_eval: point " + std::to_string(xi) +
                            " outside [-1, 1]");
  }
  const Eigen::VectorXd& c = series.coeffs;
  if (c.size() == 0) return 0.0;
  // Clenshaw recurrence.
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index k = c.size() - 1; k >= 1; --k) {
    const double b0 = 2.0 * xi * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return xi * b1 - b2 + c[0];
}

ChebSeries phi_series(int k) {
  if (k < 0) throw std::invalid_argument("phi_series: negative index");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 5);
  c[k] = 1.0;
  c[k + 2] = -2.0 * (k + 2.0) / (k + 3.0);
  c[k + 4] = (k + 1.0) / (k + 3.0);
  return ChebSeries(std::move(c));
}

ChebSeries cheb_differentiate(const ChebSeries& series) {
  const Eigen::VectorXd& c = series.coeffs;
  const Eigen::Index deg = c.size() - 1;
  if (deg <= 0) return ChebSeries(Eigen::VectorXd::Zero(1));
  // d_{k-1} = d_{k+1} + 2k c_k, with d_0 halved at the end.
  Eigen::VectorXd d = Eigen::VectorXd::Zero(deg + 2);
  for (Eigen::Index k = deg; k >= 1; --k) {
    d[k - 1] = d[k + 1] + 2.0 * k * c[k];
  }
  d[0] *= 0.5;
  return ChebSeries(d.head(deg));
}

ChebSeries cheb_interpolate(const std::function<double(double)>& f, int n) {
  if (n < 0) throw std::invalid_argument("cheb_interpolate: negative degree");
  const int m = n + 1;
  Eigen::VectorXd values(m);
  Eigen::VectorXd theta(m);
  for (int j = 0; j < m; ++j) {
    theta[j] = pi * (j + 0.5) / m;
    values[j] = f(std::cos(theta[j]));
  }
  // Discrete orthogonality of cos(k theta_j) on the Gauss points.
  Eigen::VectorXd c(m);
  for (int k = 0; k < m; ++k) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += values[j] * std::cos(k * theta[j]);
    c[k] = (k == 0 ? 1.0 : 2.0) * s / m;
  }
  return ChebSeries(std::move(c));
}

double cheb_norm_sq(int k) { return k == 0 ? pi : 0.5 * pi; }

double weighted_inner_product(const ChebSeries& f, const ChebSeries& g) {
  const Eigen::Index len = std::min(f.coeffs.size(), g.coeffs.size());
  double sum = 0.0;
  for (Eigen::Index k = 0; k < len; ++k) {
    sum += f.coeffs[k] * g.coeffs[k] * cheb_norm_sq(static_cast<int>(k));
  }
  return sum;
}

}  // namespace kvbeam
