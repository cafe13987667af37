#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace kvbeam {

using Profile = std::function<double(double)>;

/// Polynomial bump scale * (1 + xi)^left_power * (1 - xi)^right_power.
/// With both powers >= 2 it satisfies the clamped boundary conditions.
struct BumpProfile {
  double scale = 1.0;
  int left_power = 2;
  int right_power = 2;

  double operator()(double xi) const;
};

/// Physical constants of the clamped Kelvin-Voigt beam (density fixed to 1).
struct BeamParameters {
  double E = 10.0;
  double I_mom = 1.0;
  double d_KV = 0.01;
  double d_v = 0.4;
  double xi1 = -0.6;
  double xi2 = 0.3;
  Profile b1;
  Profile b2;
  std::vector<Profile> b_d;

  /// Beam of the flagship tracking experiment: E=10, I=1, d_KV=0.01,
  /// d_v=0.4, sensors at -0.6 and 0.3, bump actuators and one disturbance.
  static BeamParameters reference();

  /// Throws ValidationError. With allow_zero_kv the Kelvin-Voigt coefficient
  /// may be 0 (used by the verification suite to probe the degenerate case).
  void validate(bool allow_zero_kv = false) const;
};

/// Second-order matrices (M, F, B0, Bd0, C0) and first-order system
/// (A, B, Bd, C) with state (alpha, d/dt alpha) of length 2n.
struct GalerkinModel {
  int n = 0;
  Eigen::MatrixXd M, F, B0, Bd0, C0;
  Eigen::MatrixXd A, B, Bd, C;

  int state_dim() const { return 2 * n; }
};

/// Gram matrices of the V0, X = V0 x L2_w and V = V0 x V0 inner products.
struct NormGrams {
  Eigen::MatrixXd G_V0;  // E I (F + F^T) / 2
  Eigen::MatrixXd G_X;   // blkdiag(G_V0, M)
  Eigen::MatrixXd G_V;   // blkdiag(G_V0, G_V0)
  double beta_hat = 0.0; // sqrt(max generalized eigenvalue of (M, G_V0))
};

// Closed-form mass and stiffness matrices of the Chebyshev basis phi_k, k < n.
Eigen::MatrixXd assemble_M(int n);
Eigen::MatrixXd assemble_F(int n);

// Independent oracles: orthogonality sums for M, Chebyshev-Gauss quadrature
// of phi_k'''' phi_l w for F.
Eigen::MatrixXd oracle_M(int n);
Eigen::MatrixXd oracle_F(int n);

/// Entries <profile, phi_l>_w, l < n, from the profile's Chebyshev
/// coefficients. Prints a warning to stderr if the profile violates the
/// clamped boundary conditions by more than 1e-8.
Eigen::VectorXd assemble_input_vector(const Profile& profile, int n);

/// 2 x n matrix of phi_k(xi1), phi_k(xi2).
Eigen::MatrixXd assemble_output_matrix(double xi1, double xi2, int n);

/// Full assembly. Requires n >= 5. Throws NumericalError if M cannot be
/// factored.
GalerkinModel assemble_first_order(const BeamParameters& params, int n);

NormGrams norm_grams(const BeamParameters& params, int n);

/// The sesquilinear form a(phi, psi) on Galerkin coordinates.
///
/// Coordinates are stacked (first component, second component), each of
/// length n. In `kRaw` mode the stiffness pairings use F exactly as
/// assembled, so psi^T G_X A phi = -a(phi, psi) holds identically. In
/// `kSymmetrized` mode every V0 pairing goes through G_V0.
class SesquilinearForm {
 public:
  enum class Mode { kRaw, kSymmetrized };

  SesquilinearForm(const BeamParameters& params, int n, Mode mode = Mode::kRaw);

  double value(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const;

  const NormGrams& grams() const { return grams_; }
  int n() const { return n_; }

 private:
  int n_;
  Mode mode_;
  double E_, I_mom_, d_KV_, d_v_;
  Eigen::MatrixXd M_, F_;
  NormGrams grams_;
};

}  // namespace kvbeam
