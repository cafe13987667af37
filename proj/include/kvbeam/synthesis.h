#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "kvbeam/galerkin.h"
#include "kvbeam/matrix_equations.h"

namespace kvbeam {

/// Real internal model of the frequencies {0, w_1, ..., w_q} for p outputs:
/// G1 = diag(0_p, Omega_1, ..., Omega_q), Omega_k = [0, w_k I; -w_k I, 0],
/// G2 = [I; I; 0; ...; I; 0].
struct InternalModel {
  Eigen::MatrixXd G1;
  Eigen::MatrixXd G2;
  std::vector<double> freqs;
  int outputs = 2;

  int dim() const { return static_cast<int>(G1.rows()); }
  int q() const { return static_cast<int>(freqs.size()) - 1; }
};

/// Throws ValidationError unless freqs[0] == 0 and freqs strictly increase.
InternalModel build_internal_model(const std::vector<double>& freqs, int outputs = 2);

/// Frequencies k * base for k = 0..q.
std::vector<double> harmonic_frequencies(double base, int q);

struct SynthesisOptions {
  double alpha1 = 2.0;
  double alpha2 = 0.8;
  Eigen::Matrix2d R1 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R2 = Eigen::Matrix2d::Identity();
  // Weights multiply the coordinate identity: Q1 Q1^* = q1 I,
  // Q_s^* Q_s = blkdiag(q0 I, q2 I).
  double q0 = 1.0;
  double q1 = 1.0;
  double q2 = 1.0;
  int r = 4;
  double zero_threshold = 1e-8;

  void validate(int design_state_dim) const;
};

struct ObserverDesign {
  Eigen::MatrixXd L;      // 2n x 2
  Eigen::MatrixXd Sigma;
  double care_residual = 0.0;
  double margin = 0.0;    // of A + L C
};

struct StateFeedbackDesign {
  Eigen::MatrixXd K1;     // p x dim Z0
  Eigen::MatrixXd K2;     // p x 2n
  Eigen::MatrixXd Pi;
  double care_residual = 0.0;
  double margin = 0.0;    // of A_s + B_s K
};

struct ReducedObserver {
  Eigen::MatrixXd AL, BL, Lr, K2r;
  Eigen::VectorXd hankel_sv;
  double gramian_residual = 0.0;
};

/// Error-feedback controller
///   z1' = G1 z1 + G2 e
///   z2' = (AL + BL K2r) z2 + BL K1 z1 - Lr e
///   u   = K1 z1 + K2r z2.
struct RegulatorRealization {
  Eigen::MatrixXd G1, G2, AL, BL, Lr, K1, K2r;

  int dim() const { return static_cast<int>(G1.rows() + AL.rows()); }
  /// Controller as (dynamics, input map from e, output map to u).
  StateSpace as_state_space() const;
};

/// Internal-model-only controller z' = G1 z + G2 e, u = K z.
struct LowGainController {
  Eigen::MatrixXd G1, G2, K;
  double eps = 0.0;

  int dim() const { return static_cast<int>(G1.rows()); }
  StateSpace as_state_space() const;
};

ObserverDesign design_observer_gain(const GalerkinModel& plant,
                                    const SynthesisOptions& opts);

StateFeedbackDesign design_state_feedback(const GalerkinModel& plant,
                                          const InternalModel& im,
                                          const SynthesisOptions& opts);

/// Balanced truncation of (A + L C, [B, L], K2) to order r. For r equal to
/// the full order the observer is returned unreduced.
ReducedObserver reduce_observer(const GalerkinModel& plant, const Eigen::MatrixXd& L,
                                const Eigen::MatrixXd& K2, int r);

/// Packages the controller. With r == 0 (empty reduced parts) the result is
/// the pure internal-model controller.
RegulatorRealization assemble_regulator(const InternalModel& im,
                                        const ReducedObserver& reduced,
                                        const Eigen::MatrixXd& K1);

/// P(lambda) = C (lambda I - A)^{-1} B.
Eigen::MatrixXcd transfer_function_value(const GalerkinModel& plant,
                                         std::complex<double> lambda);

struct TransmissionZeroReport {
  std::vector<double> freqs;
  std::vector<double> sigma_min;
  double threshold = 1e-8;

  bool passed() const;
};

TransmissionZeroReport check_transmission_zeros(const GalerkinModel& plant,
                                                const std::vector<double>& freqs,
                                                double threshold = 1e-8);

/// K = -eps [P(0)^{-1}, Re P(i w_1)^{-1}, Im P(i w_1)^{-1}, ...].
/// The minus sign matches the error convention e = y - y_ref.
LowGainController build_low_gain(const GalerkinModel& plant, const InternalModel& im,
                                 double eps);

struct EpsilonTuning {
  double eps_star = 0.0;
  double margin = 0.0;
  double plant_margin = 0.0;  // open-loop margin of the plant
  bool stabilizing() const { return margin > kHurwitzThreshold; }
  // Best margin recovers less than a tenth of the open-loop margin.
  bool poorly_stabilizable() const { return margin < kPoorFraction * plant_margin; }
  static constexpr double kPoorFraction = 0.1;
};

/// Maximizes the closed-loop stability margin of the low-gain loop over
/// eps in [eps_max * 1e-4, eps_max]: log-spaced grid, then golden-section
/// refinement around the best grid point.
EpsilonTuning tune_epsilon(const GalerkinModel& plant, const InternalModel& im,
                           double eps_max = 1.0, int grid_points = 400);

/// Everything produced by the full synthesis pipeline.
struct SynthesisReport {
  RegulatorRealization controller;
  TransmissionZeroReport zeros;
  ObserverDesign observer;
  StateFeedbackDesign feedback;
  Eigen::VectorXd hankel_sv;
  double gramian_residual = 0.0;
};

/// Internal model, observer and state-feedback Riccati designs, and
/// balanced truncation of the observer. Throws NumericalError if the
/// transmission-zero check fails.
SynthesisReport synthesize_regulator(const GalerkinModel& plant,
                                     const InternalModel& im,
                                     const SynthesisOptions& opts);

}  // namespace kvbeam
