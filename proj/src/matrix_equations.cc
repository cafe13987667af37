#include "kvbeam/matrix_equations.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "kvbeam/errors.h"

namespace kvbeam {

namespace {

using cd = std::complex<double>;

void require_square(const Eigen::MatrixXd& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw ValidationError(std::string(who) + ": matrix must be square and nonempty");
  }
}

void require_hurwitz(const Eigen::MatrixXd& A, const char* who) {
  const double margin = stability_margin(A);
  if (!(margin > kHurwitzThreshold)) {
    throw ValidationError(std::string(who) + ": matrix is not Hurwitz (margin " +
                          std::to_string(margin) + ")");
  }
}

// Swaps diagonal entries k and k+1 of the upper triangular T with a unitary
// rotation, updating the Schur vectors U.
void swap_schur_entries(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Eigen::Index k) {
  const cd a = T(k, k), b = T(k, k + 1), c = T(k + 1, k + 1);
  Eigen::Vector2cd x(b, c - a);
  const double nx = x.norm();
  if (nx == 0.0) return;
  x /= nx;
  Eigen::Matrix2cd G;
  G << x[0], -std::conj(x[1]), x[1], std::conj(x[0]);
  const Eigen::Index m = T.rows();
  T.block(k, k, 2, m - k) = G.adjoint() * T.block(k, k, 2, m - k);
  T.block(0, k, k + 2, 2) = T.block(0, k, k + 2, 2) * G;
  T(k + 1, k) = 0.0;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
}

// Reorders the complex Schur form so that eigenvalues with negative real
// part come first. Returns their count.
Eigen::Index order_stable_first(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U) {
  const Eigen::Index m = T.rows();
  Eigen::Index placed = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (T(j, j).real() < 0.0) {
      for (Eigen::Index k = j; k > placed; --k) swap_schur_entries(T, U, k - 1);
      ++placed;
    }
  }
  return placed;
}

Eigen::MatrixXd riccati_residual_matrix(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& S,
                                        const Eigen::MatrixXd& Q,
                                        const Eigen::MatrixXd& P) {
  return A.transpose() * P + P * A - P * S * P + Q;
}

}  // namespace

StateSpace::StateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  D = Eigen::MatrixXd::Zero(C.rows(), B.cols());
}

StateSpace::StateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                       Eigen::MatrixXd d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {}

void StateSpace::validate() const {
  const Eigen::Index m = A.rows();
  if (A.cols() != m || B.rows() != m || C.cols() != m || D.rows() != C.rows() ||
      D.cols() != B.cols()) {
    throw ValidationError("StateSpace: inconsistent block dimensions");
  }
}

Eigen::MatrixXcd StateSpace::transfer(std::complex<double> s) const {
  validate();
  Eigen::MatrixXcd resolvent = -A.cast<cd>();
  resolvent.diagonal().array() += s;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(resolvent);
  if (!(lu.rcond() > 1e-15)) {
    throw NumericalError("transfer: sI - A is numerically singular");
  }
  return C.cast<cd>() * lu.solve(B.cast<cd>()) + D.cast<cd>();
}

double stability_margin(const Eigen::MatrixXd& A) {
  require_square(A, "stability_margin");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("stability_margin: eigenvalue computation failed");
  }
  return -es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W) {
  require_square(A, "solve_lyapunov");
  const Eigen::Index m = A.rows();
  if (W.rows() != m || W.cols() != m) {
    throw ValidationError("solve_lyapunov: W has wrong dimensions");
  }
  require_hurwitz(A, "solve_lyapunov");

  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("solve_lyapunov: Schur decomposition failed");
  }
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd What = U.adjoint() * W.cast<cd>() * U;

  // T Y + Y T^H = -What, solved column by column from the right.
  Eigen::MatrixXcd Y(m, m);
  Eigen::MatrixXcd shifted(m, m);
  for (Eigen::Index j = m - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -What.col(j);
    const Eigen::Index tail = m - 1 - j;
    if (tail > 0) {
      rhs -= Y.rightCols(tail) * T.row(j).tail(tail).adjoint();
    }
    shifted = T;
    shifted.diagonal().array() += std::conj(T(j, j));
    Y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXd X = (U * Y * U.adjoint()).real();
  if (W.isApprox(W.transpose(), 1e-14)) X = 0.5 * (X + X.transpose()).eval();
  return X;
}

double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& W) {
  const double scale = 2.0 * A.norm() * X.norm() + W.norm();
  const double res = (A * X + X * A.transpose() + W).norm();
  return scale > 0.0 ? res / scale : res;
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  require_square(A, "solve_care");
  const Eigen::Index m = A.rows();
  if (B.rows() != m || Q.rows() != m || Q.cols() != m || R.rows() != B.cols() ||
      R.cols() != B.cols()) {
    throw ValidationError("solve_care: inconsistent dimensions");
  }
  const Eigen::LLT<Eigen::MatrixXd> r_chol(R);
  if (r_chol.info() != Eigen::Success) {
    throw ValidationError("solve_care: R must be positive definite");
  }
  const Eigen::MatrixXd S = B * r_chol.solve(B.transpose());

  Eigen::MatrixXd H(2 * m, 2 * m);
  H << A, -S, -Q, -A.transpose();
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(H);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("solve_care: Schur decomposition of the Hamiltonian failed");
  }
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();
  const Eigen::Index stable = order_stable_first(T, U);
  if (stable != m) {
    throw NumericalError("solve_care: Hamiltonian has " + std::to_string(stable) +
                         " stable eigenvalues, expected " + std::to_string(m) +
                         " (no stabilizing solution)");
  }
  const Eigen::MatrixXcd U1 = U.topLeftCorner(m, m);
  const Eigen::MatrixXcd U2 = U.bottomLeftCorner(m, m);
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(U1.transpose());
  if (!(lu.rcond() > 1e-14)) {
    throw NumericalError("solve_care: stable invariant subspace is not a graph "
                         "(no stabilizing solution)");
  }
  Eigen::MatrixXd P = lu.solve(U2.transpose()).transpose().real();
  P = 0.5 * (P + P.transpose()).eval();

  // Newton (Kleinman) refinement on the residual.
  for (int iter = 0; iter < 3; ++iter) {
    const Eigen::MatrixXd res = riccati_residual_matrix(A, S, Q, P);
    if (care_residual(A, B, Q, R, P) < 1e-14) break;
    const Eigen::MatrixXd Acl = A - S * P;
    if (!(stability_margin(Acl) > kHurwitzThreshold)) break;
    const Eigen::MatrixXd dP = solve_lyapunov(Acl.transpose(), res);
    const Eigen::MatrixXd candidate = P + 0.5 * (dP + dP.transpose());
    if (care_residual(A, B, Q, R, candidate) >= care_residual(A, B, Q, R, P)) break;
    P = candidate;
  }

  const double margin = stability_margin(A - S * P);
  if (!(margin > kHurwitzThreshold)) {
    throw NumericalError("solve_care: closed loop not Hurwitz (margin " +
                         std::to_string(margin) + ")");
  }
  return P;
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd S = B * R.llt().solve(B.transpose());
  const double pn = P.norm();
  const double scale = 2.0 * A.norm() * pn + S.norm() * pn * pn + Q.norm();
  const double res = riccati_residual_matrix(A, S, Q, P).norm();
  return scale > 0.0 ? res / scale : res;
}

namespace {

// Returns L with X = L L^T; falls back to a symmetric eigenvalue square root
// when X is only semidefinite to roundoff.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& X) {
  const Eigen::LLT<Eigen::MatrixXd> llt(X);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd L = llt.matrixL();
    if (L.allFinite() && L.diagonal().minCoeff() > 0.0) return L;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X);
  if (es.info() != Eigen::Success) {
    throw NumericalError("balanced_truncate: Gramian eigendecomposition failed");
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

struct Gramians {
  Eigen::MatrixXd Lc, Lo;
  double residual_c = 0.0, residual_o = 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd;
};

Gramians factor_gramians(const StateSpace& sys) {
  const Eigen::MatrixXd Wc = solve_lyapunov(sys.A, sys.B * sys.B.transpose());
  const Eigen::MatrixXd Wo =
      solve_lyapunov(sys.A.transpose(), sys.C.transpose() * sys.C);
  Gramians g;
  g.residual_c = lyapunov_residual(sys.A, Wc, sys.B * sys.B.transpose());
  g.residual_o =
      lyapunov_residual(sys.A.transpose(), Wo, sys.C.transpose() * sys.C);
  g.Lc = psd_factor(Wc);
  g.Lo = psd_factor(Wo);
  g.svd.compute(g.Lo.transpose() * g.Lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return g;
}

}  // namespace

Eigen::VectorXd hankel_singular_values(const StateSpace& sys) {
  sys.validate();
  require_hurwitz(sys.A, "hankel_singular_values");
  return factor_gramians(sys).svd.singularValues();
}

BTResult balanced_truncate(const StateSpace& sys, int r) {
  sys.validate();
  require_hurwitz(sys.A, "balanced_truncate");
  const Eigen::Index m = sys.order();
  if (r < 1 || r > m) {
    throw ValidationError("balanced_truncate: order " + std::to_string(r) +
                          " outside [1, " + std::to_string(m) + "]");
  }
  const Gramians g = factor_gramians(sys);
  BTResult out;
  out.hankel_sv = g.svd.singularValues();
  out.gramian_residual = std::max(g.residual_c, g.residual_o);
  if (r == m) {
    out.reduced = sys;
    out.left = Eigen::MatrixXd::Identity(m, m);
    out.right = Eigen::MatrixXd::Identity(m, m);
    return out;
  }
  const Eigen::VectorXd& s = out.hankel_sv;
  if (!(s[r - 1] > 0.0) || !(s[r - 1] - s[r] > 1e-12 * s[0])) {
    throw NumericalError("balanced_truncate: no singular-value gap at order " +
                         std::to_string(r));
  }
  const Eigen::VectorXd inv_root = s.head(r).cwiseSqrt().cwiseInverse();
  out.right = g.Lc * g.svd.matrixV().leftCols(r) * inv_root.asDiagonal();
  out.left = (g.Lo * g.svd.matrixU().leftCols(r) * inv_root.asDiagonal()).transpose();
  out.reduced = StateSpace(out.left * sys.A * out.right, out.left * sys.B,
                           sys.C * out.right, sys.D);
  return out;
}

}  // namespace kvbeam
