#pragma once

#include <complex>

#include <Eigen/Core>

namespace kvbeam {

/// Dense LTI system x' = A x + B u, y = C x + D u.
struct StateSpace {
  Eigen::MatrixXd A, B, C, D;

  StateSpace() = default;
  StateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c);
  StateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
             Eigen::MatrixXd d);

  Eigen::Index order() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }

  /// Throws ValidationError on inconsistent block sizes.
  void validate() const;

  /// G(s) = C (sI - A)^{-1} B + D. Throws NumericalError if sI - A is
  /// numerically singular.
  Eigen::MatrixXcd transfer(std::complex<double> s) const;
};

/// Threshold used by every Hurwitz check in the library.
inline constexpr double kHurwitzThreshold = 1e-10;

/// -max Re(lambda_i(A)). Positive iff A is Hurwitz.
double stability_margin(const Eigen::MatrixXd& A);

/// Solves A X + X A^T + W = 0 for Hurwitz A (Bartels-Stewart on the complex
/// Schur form). Throws ValidationError if A is not Hurwitz.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W);

/// ||A X + X A^T + W||_F / (2 ||A||_F ||X||_F + ||W||_F).
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& W);

/// Stabilizing solution of A^T P + P A - P B R^{-1} B^T P + Q = 0, taken
/// from the stable invariant subspace of the Hamiltonian matrix.
/// Throws NumericalError if no stabilizing solution exists.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// ||res||_F / (2 ||A||_F ||P||_F + ||B R^{-1} B^T||_F ||P||_F^2 + ||Q||_F),
/// the usual backward-error normalization.
double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P);

struct BTResult {
  StateSpace reduced;
  Eigen::VectorXd hankel_sv;  // nonincreasing
  Eigen::MatrixXd left;       // r x m, reduced.A = left * A * right
  Eigen::MatrixXd right;      // m x r
  double gramian_residual = 0.0;  // worst Lyapunov residual of the Gramians
};

/// Square-root balanced truncation to order r. With r equal to the full
/// order the system is returned unchanged (identity projections).
BTResult balanced_truncate(const StateSpace& sys, int r);

/// Hankel singular values only.
Eigen::VectorXd hankel_singular_values(const StateSpace& sys);

}  // namespace kvbeam
