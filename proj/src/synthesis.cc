#include "kvbeam/synthesis.h"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "kvbeam/errors.h"

namespace kvbeam {

namespace {

using cd = std::complex<double>;

Eigen::MatrixXd identity(Eigen::Index m) { return Eigen::MatrixXd::Identity(m, m); }

void require_margin(double achieved, double required, const std::string& what) {
  if (!(achieved >= required - 1e-6)) {
    throw NumericalError(what + ": stability margin " + std::to_string(achieved) +
                         " below required " + std::to_string(required));
  }
}

Eigen::MatrixXd low_gain_loop(const GalerkinModel& plant, const LowGainController& c) {
  const Eigen::Index m = plant.A.rows(), d = c.G1.rows();
  Eigen::MatrixXd Acl(m + d, m + d);
  Acl << plant.A, plant.B * c.K, c.G2 * plant.C, c.G1;
  return Acl;
}

}  // namespace

InternalModel build_internal_model(const std::vector<double>& freqs, int outputs) {
  if (freqs.empty() || freqs.front() != 0.0) {
    throw ValidationError("internal model: frequency list must start at 0");
  }
  if (outputs < 1) throw ValidationError("internal model: need at least one output");
  for (std::size_t k = 1; k < freqs.size(); ++k) {
    if (!(freqs[k] > freqs[k - 1])) {
      throw ValidationError("internal model: frequencies must be strictly increasing");
    }
  }
  const int p = outputs;
  const int q = static_cast<int>(freqs.size()) - 1;
  const int dim = p * (2 * q + 1);
  InternalModel im;
  im.freqs = freqs;
  im.outputs = p;
  im.G1 = Eigen::MatrixXd::Zero(dim, dim);
  im.G2 = Eigen::MatrixXd::Zero(dim, p);
  im.G2.topRows(p) = identity(p);
  for (int k = 1; k <= q; ++k) {
    const int at = p + 2 * p * (k - 1);
    im.G1.block(at, at + p, p, p) = freqs[k] * identity(p);
    im.G1.block(at + p, at, p, p) = -freqs[k] * identity(p);
    im.G2.block(at, 0, p, p) = identity(p);
  }
  return im;
}

std::vector<double> harmonic_frequencies(double base, int q) {
  std::vector<double> f;
  for (int k = 0; k <= q; ++k) f.push_back(k * base);
  return f;
}

void SynthesisOptions::validate(int design_state_dim) const {
  auto fail = [](const std::string& m) { throw ValidationError("synthesis: " + m); };
  if (!(alpha1 >= 0) || !(alpha2 >= 0)) fail("alpha1 and alpha2 must be nonnegative");
  for (const Eigen::Matrix2d* R : {&R1, &R2}) {
    if (!R->isApprox(R->transpose()) || R->llt().info() != Eigen::Success) {
      fail("R1 and R2 must be symmetric positive definite");
    }
  }
  if (!(q0 > 0) || !(q1 > 0) || !(q2 > 0)) fail("weights q0, q1, q2 must be positive");
  if (r < 0 || r > design_state_dim) {
    fail("reduction order r must lie in [0, " + std::to_string(design_state_dim) + "]");
  }
  if (!(zero_threshold >= 0)) fail("zero threshold must be nonnegative");
}

StateSpace RegulatorRealization::as_state_space() const {
  const Eigen::Index d = G1.rows(), r = AL.rows(), p = G2.cols();
  Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(d + r, d + r);
  Ac.topLeftCorner(d, d) = G1;
  if (r > 0) {
    Ac.bottomLeftCorner(r, d) = BL * K1;
    Ac.bottomRightCorner(r, r) = AL + BL * K2r;
  }
  Eigen::MatrixXd Bc(d + r, p);
  Bc.topRows(d) = G2;
  if (r > 0) Bc.bottomRows(r) = -Lr;
  Eigen::MatrixXd Cc(K1.rows(), d + r);
  Cc.leftCols(d) = K1;
  if (r > 0) Cc.rightCols(r) = K2r;
  return StateSpace(Ac, Bc, Cc);
}

StateSpace LowGainController::as_state_space() const { return StateSpace(G1, G2, K); }

ObserverDesign design_observer_gain(const GalerkinModel& plant,
                                    const SynthesisOptions& opts) {
  const Eigen::Index m = plant.A.rows();
  const Eigen::MatrixXd As = plant.A + opts.alpha1 * identity(m);
  const Eigen::MatrixXd Q = opts.q1 * identity(m);
  const Eigen::MatrixXd R = opts.R1;
  // Filter Riccati equation as the dual control problem.
  ObserverDesign out;
  out.Sigma = solve_care(As.transpose(), plant.C.transpose(), Q, R);
  out.care_residual = care_residual(As.transpose(), plant.C.transpose(), Q, R, out.Sigma);
  out.L = -out.Sigma * plant.C.transpose() * R.inverse();
  out.margin = stability_margin(plant.A + out.L * plant.C);
  require_margin(out.margin, opts.alpha1, "observer design");
  return out;
}

StateFeedbackDesign design_state_feedback(const GalerkinModel& plant,
                                          const InternalModel& im,
                                          const SynthesisOptions& opts) {
  const Eigen::Index m = plant.A.rows(), d = im.G1.rows();
  if (im.G2.cols() != plant.C.rows()) {
    throw ValidationError("state feedback: internal model output count mismatch");
  }
  Eigen::MatrixXd As = Eigen::MatrixXd::Zero(d + m, d + m);
  As.topLeftCorner(d, d) = im.G1;
  As.topRightCorner(d, m) = im.G2 * plant.C;
  As.bottomRightCorner(m, m) = plant.A;
  // Pointwise measurements carry no feedthrough, so G2 D = 0.
  Eigen::MatrixXd Bs = Eigen::MatrixXd::Zero(d + m, plant.B.cols());
  Bs.bottomRows(m) = plant.B;
  Eigen::MatrixXd Qs = Eigen::MatrixXd::Zero(d + m, d + m);
  Qs.topLeftCorner(d, d) = opts.q0 * identity(d);
  Qs.bottomRightCorner(m, m) = opts.q2 * identity(m);

  const Eigen::MatrixXd shifted = As + opts.alpha2 * identity(d + m);
  const Eigen::MatrixXd R = opts.R2;
  StateFeedbackDesign out;
  out.Pi = solve_care(shifted, Bs, Qs, R);
  out.care_residual = care_residual(shifted, Bs, Qs, R, out.Pi);
  const Eigen::MatrixXd K = -R.llt().solve(Bs.transpose() * out.Pi);
  out.K1 = K.leftCols(d);
  out.K2 = K.rightCols(m);
  out.margin = stability_margin(As + Bs * K);
  require_margin(out.margin, opts.alpha2, "state feedback design");
  return out;
}

ReducedObserver reduce_observer(const GalerkinModel& plant, const Eigen::MatrixXd& L,
                                const Eigen::MatrixXd& K2, int r) {
  const Eigen::Index m = plant.A.rows(), p = plant.B.cols();
  Eigen::MatrixXd inputs(m, p + L.cols());
  inputs << plant.B, L;
  const StateSpace sys(plant.A + L * plant.C, inputs, K2);
  const BTResult bt = balanced_truncate(sys, r);
  ReducedObserver out;
  out.AL = bt.reduced.A;
  out.BL = bt.reduced.B.leftCols(p);
  out.Lr = bt.reduced.B.rightCols(L.cols());
  out.K2r = bt.reduced.C;
  out.hankel_sv = bt.hankel_sv;
  out.gramian_residual = bt.gramian_residual;
  return out;
}

RegulatorRealization assemble_regulator(const InternalModel& im,
                                        const ReducedObserver& reduced,
                                        const Eigen::MatrixXd& K1) {
  const Eigen::Index d = im.G1.rows(), p = im.G2.cols(), r = reduced.AL.rows();
  RegulatorRealization c;
  c.G1 = im.G1;
  c.G2 = im.G2;
  c.K1 = K1;
  if (r == 0) {
    c.AL = Eigen::MatrixXd::Zero(0, 0);
    c.BL = Eigen::MatrixXd::Zero(0, K1.rows());
    c.Lr = Eigen::MatrixXd::Zero(0, p);
    c.K2r = Eigen::MatrixXd::Zero(K1.rows(), 0);
  } else {
    c.AL = reduced.AL;
    c.BL = reduced.BL;
    c.Lr = reduced.Lr;
    c.K2r = reduced.K2r;
  }
  if (K1.cols() != d || c.AL.cols() != r || c.BL.rows() != r ||
      c.BL.cols() != K1.rows() || c.Lr.rows() != r || c.Lr.cols() != p ||
      c.K2r.rows() != K1.rows() || c.K2r.cols() != r) {
    throw ValidationError("assemble_regulator: dimension mismatch");
  }
  return c;
}

Eigen::MatrixXcd transfer_function_value(const GalerkinModel& plant, cd lambda) {
  return StateSpace(plant.A, plant.B, plant.C).transfer(lambda);
}

bool TransmissionZeroReport::passed() const {
  for (double s : sigma_min) {
    if (!(s > threshold)) return false;
  }
  return true;
}

TransmissionZeroReport check_transmission_zeros(const GalerkinModel& plant,
                                                const std::vector<double>& freqs,
                                                double threshold) {
  TransmissionZeroReport rep;
  rep.freqs = freqs;
  rep.threshold = threshold;
  for (double w : freqs) {
    double smin = 0.0;
    try {
      const Eigen::MatrixXcd P = transfer_function_value(plant, cd(0.0, w));
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(P);
      smin = svd.singularValues().minCoeff();
    } catch (const NumericalError&) {
      smin = 0.0;  // pole on the imaginary axis: no usable P(i w)
    }
    rep.sigma_min.push_back(smin);
  }
  return rep;
}

LowGainController build_low_gain(const GalerkinModel& plant, const InternalModel& im,
                                 double eps) {
  const int p = im.outputs;
  if (plant.B.cols() != p || plant.C.rows() != p) {
    throw ValidationError("low gain: plant must be square with p = " + std::to_string(p));
  }
  LowGainController c;
  c.G1 = im.G1;
  c.G2 = im.G2;
  c.eps = eps;
  c.K = Eigen::MatrixXd::Zero(p, im.dim());
  for (int k = 0; k <= im.q(); ++k) {
    const Eigen::MatrixXcd P = transfer_function_value(plant, cd(0.0, im.freqs[k]));
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(P);
    if (!lu.isInvertible()) {
      throw NumericalError("low gain: P(i w_" + std::to_string(k) + ") is singular");
    }
    const Eigen::MatrixXcd Pinv = lu.inverse();
    if (k == 0) {
      c.K.leftCols(p) = Pinv.real();
    } else {
      const int at = p + 2 * p * (k - 1);
      c.K.middleCols(at, p) = Pinv.real();
      c.K.middleCols(at + p, p) = Pinv.imag();
    }
  }
  c.K *= -eps;
  return c;
}

EpsilonTuning tune_epsilon(const GalerkinModel& plant, const InternalModel& im,
                           double eps_max, int grid_points) {
  if (!(eps_max > 0) || grid_points < 3) {
    throw ValidationError("tune_epsilon: need eps_max > 0 and at least 3 grid points");
  }
  const LowGainController unit = build_low_gain(plant, im, 1.0);
  auto margin_at = [&](double eps) {
    LowGainController c = unit;
    c.K *= eps;
    c.eps = eps;
    return stability_margin(low_gain_loop(plant, c));
  };

  const double lo = std::log(eps_max * 1e-4), hi = std::log(eps_max);
  std::vector<double> grid(grid_points), margins(grid_points);
  int best = 0;
  for (int i = 0; i < grid_points; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * i / (grid_points - 1));
    margins[i] = margin_at(grid[i]);
    if (margins[i] > margins[best]) best = i;
  }

  // Golden-section search on the bracket around the best grid point.
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, grid_points - 1)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = margin_at(x1), f2 = margin_at(x2);
  for (int it = 0; it < 60 && (b - a) > 1e-10 * b; ++it) {
    if (f1 > f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - g * (b - a); f1 = margin_at(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + g * (b - a); f2 = margin_at(x2);
    }
  }
  const double plant_margin = stability_margin(plant.A);
  EpsilonTuning out{grid[best], margins[best], plant_margin};
  const double mid = 0.5 * (a + b);
  const double fmid = margin_at(mid);
  if (fmid > out.margin) out = {mid, fmid, plant_margin};
  return out;
}

SynthesisReport synthesize_regulator(const GalerkinModel& plant, const InternalModel& im,
                                     const SynthesisOptions& opts) {
  opts.validate(plant.state_dim());
  SynthesisReport rep;
  rep.zeros = check_transmission_zeros(plant, im.freqs, opts.zero_threshold);
  if (!rep.zeros.passed()) {
    throw NumericalError("synthesis: plant has a transmission zero at an internal "
                         "model frequency (sigma_min below threshold)");
  }
  rep.observer = design_observer_gain(plant, opts);
  rep.feedback = design_state_feedback(plant, im, opts);
  ReducedObserver reduced;
  if (opts.r > 0) {
    reduced = reduce_observer(plant, rep.observer.L, rep.feedback.K2, opts.r);
    rep.hankel_sv = reduced.hankel_sv;
    rep.gramian_residual = reduced.gramian_residual;
  }
  rep.controller = assemble_regulator(im, reduced, rep.feedback.K1);
  return rep;
}

}  // namespace kvbeam
