#include "kvbeam/signals.h"

#include <cmath>
#include <numbers>
#include <string>

#include "kvbeam/errors.h"

namespace kvbeam {

using std::numbers::pi;

TrigSignal TrigSignal::zero(int components) {
  TrigSignal s;
  s.a0 = Eigen::VectorXd::Zero(components);
  return s;
}

void TrigSignal::validate() const {
  const Eigen::Index c = a0.size();
  if (a.size() != freqs.size() || b.size() != freqs.size()) {
    throw ValidationError("signal: one cosine and one sine vector per frequency");
  }
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (a[k].size() != c || b[k].size() != c) {
      throw ValidationError("signal: coefficient vector " + std::to_string(k + 1) +
                            " has wrong length");
    }
  }
}

Eigen::VectorXd eval_trig(const TrigSignal& sig, double t) {
  Eigen::VectorXd v = sig.a0;
  for (std::size_t k = 0; k < sig.freqs.size(); ++k) {
    const double wt = sig.freqs[k] * t;
    v += std::cos(wt) * sig.a[k] + std::sin(wt) * sig.b[k];
  }
  return v;
}

double eval_triangle(const TriangleWave& w, double t) {
  const double P = w.period;
  double s = std::fmod(t, P) / P;  // phase in [0, 1)
  if (s < 0) s += 1.0;
  double v;
  if (s < 0.25) {
    v = 4.0 * s;
  } else if (s < 0.75) {
    v = 2.0 - 4.0 * s;
  } else {
    v = 4.0 * s - 4.0;
  }
  return w.amplitude * v;
}

TrigSignal fourier_truncate(const TriangleWave& w, int q) {
  if (q < 0) throw ValidationError("fourier_truncate: q must be nonnegative");
  TrigSignal s = TrigSignal::zero(1);
  const double base = 2.0 * pi / w.period;
  for (int k = 1; k <= q; ++k) {
    s.freqs.push_back(k * base);
    s.a.push_back(Eigen::VectorXd::Zero(1));
    Eigen::VectorXd bk = Eigen::VectorXd::Zero(1);
    if (k % 2 == 1) {
      const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
      bk[0] = sign * 8.0 * w.amplitude / (pi * pi * k * k);
    }
    s.b.push_back(bk);
  }
  return s;
}

double truncation_error(const TriangleWave& w, int q, int grid_points) {
  const TrigSignal s = fourier_truncate(w, q);
  double err = 0.0;
  for (int i = 0; i <= grid_points; ++i) {
    const double t = w.period * i / grid_points;
    err = std::max(err, std::abs(eval_triangle(w, t) - eval_trig(s, t)[0]));
  }
  return err;
}

}  // namespace kvbeam
