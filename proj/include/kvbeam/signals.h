#pragma once

#include <vector>

#include <Eigen/Core>

namespace kvbeam {

/// a0 + sum_k (a_k cos(w_k t) + b_k sin(w_k t)), vector valued.
struct TrigSignal {
  Eigen::VectorXd a0;
  std::vector<double> freqs;          // w_1..w_q (w_0 = 0 is carried by a0)
  std::vector<Eigen::VectorXd> a, b;  // one vector per frequency

  static TrigSignal zero(int components);
  int components() const { return static_cast<int>(a0.size()); }
  /// Throws ValidationError on inconsistent sizes.
  void validate() const;
};

Eigen::VectorXd eval_trig(const TrigSignal& sig, double t);

/// Continuous 2-periodic zero-mean triangle: 0 at integer t, +amplitude at
/// t = 0.5, -amplitude at t = 1.5.
struct TriangleWave {
  double amplitude = 1.0;
  double period = 2.0;
};

double eval_triangle(const TriangleWave& w, double t);

/// Fourier series of the triangle truncated to harmonics k = 1..q of the
/// base frequency 2 pi / period. Only odd sine terms are nonzero.
TrigSignal fourier_truncate(const TriangleWave& w, int q);

/// max over a uniform grid on one period of |triangle - truncation|.
double truncation_error(const TriangleWave& w, int q, int grid_points = 10000);

}  // namespace kvbeam
