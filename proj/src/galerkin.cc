#include "kvbeam/galerkin.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "kvbeam/chebyshev.h"
#include "kvbeam/errors.h"

namespace kvbeam {

using std::numbers::pi;

namespace {

constexpr double kBoundaryTol = 1e-8;

// Interpolation degree used to obtain profile coefficients. Profiles in this
// project are low-degree polynomials, for which this is exact.
int profile_degree(int n) { return std::max(n + 4, 64); }

void require_basis_size(int n, int min_n, const char* who) {
  if (n < min_n) {
    throw ValidationError(std::string(who) + ": basis size " + std::to_string(n) +
                          " below minimum " + std::to_string(min_n));
  }
}

}  // namespace

double BumpProfile::operator()(double xi) const {
  return scale * std::pow(1.0 + xi, left_power) * std::pow(1.0 - xi, right_power);
}

BeamParameters BeamParameters::reference() {
  BeamParameters p;
  p.b1 = BumpProfile{1.0 / 3.0, 2, 6};
  p.b2 = BumpProfile{1.0 / 3.0, 6, 2};
  p.b_d = {BumpProfile{1.0 / 3.0, 2, 2}};
  return p;
}

void BeamParameters::validate(bool allow_zero_kv) const {
  auto fail = [](const std::string& msg) { throw ValidationError("beam: " + msg); };
  if (!(E > 0)) fail("E must be positive");
  if (!(I_mom > 0)) fail("I must be positive");
  if (allow_zero_kv ? !(d_KV >= 0) : !(d_KV > 0)) fail("d_KV must be positive");
  if (!(d_v >= 0)) fail("d_v must be nonnegative");
  if (!(std::abs(xi1) < 1) || !(std::abs(xi2) < 1)) {
    fail("measurement points must lie in (-1, 1)");
  }
  if (!b1 || !b2) fail("both control profiles are required");
  std::vector<std::pair<std::string, const Profile*>> profiles = {{"b1", &b1},
                                                                   {"b2", &b2}};
  for (std::size_t k = 0; k < b_d.size(); ++k) {
    if (!b_d[k]) fail("disturbance profile " + std::to_string(k) + " is empty");
    profiles.emplace_back("b_d" + std::to_string(k + 1), &b_d[k]);
  }
  for (const auto& [name, f] : profiles) {
    const ChebSeries s = cheb_interpolate(*f, 64);
    const ChebSeries ds = cheb_differentiate(s);
    for (double x : {-1.0, 1.0}) {
      if (std::abs(cheb_eval(s, x)) > kBoundaryTol ||
          std::abs(cheb_eval(ds, x)) > kBoundaryTol) {
        fail("profile " + name + " violates clamped boundary conditions");
      }
    }
  }
}

Eigen::MatrixXd assemble_M(int n) {
  require_basis_size(n, 1, "assemble_M");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    const double l1 = l + 1.0, l2 = l + 2.0, l3 = l + 3.0, l4 = l + 4.0, l5 = l + 5.0;
    M(l, l) = (l == 0) ? 35.0 * pi / 18.0
                       : pi * (l1 * l1 + 4.0 * l2 * l2 + l3 * l3) / (2.0 * l3 * l3);
    if (l + 2 < n) {
      M(l, l + 2) = M(l + 2, l) = -pi * (l2 * l5 + l1 * l4) / (l3 * l5);
    }
    if (l + 4 < n) {
      M(l, l + 4) = M(l + 4, l) = pi * l1 / (2.0 * l3);
    }
  }
  return M;
}

Eigen::MatrixXd assemble_F(int n) {
  require_basis_size(n, 1, "assemble_F");
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    const double l1 = l + 1.0, l2 = l + 2.0, l4 = l + 4.0;
    F(l, l) = 8.0 * l1 * l1 * l2 * l4 * pi;
    for (int k = l + 2; k < n; k += 2) {
      const double k2 = k + 2.0;
      F(l, k) = 8.0 * pi * l1 * l2 * (l * l4 + 3.0 * k2 * k2) / (k + 3.0);
    }
  }
  return F;
}

Eigen::MatrixXd oracle_M(int n) {
  require_basis_size(n, 1, "oracle_M");
  std::vector<ChebSeries> basis;
  for (int k = 0; k < n; ++k) basis.push_back(phi_series(k));
  Eigen::MatrixXd M(n, n);
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) M(l, k) = weighted_inner_product(basis[k], basis[l]);
  }
  return M;
}

Eigen::MatrixXd oracle_F(int n) {
  require_basis_size(n, 1, "oracle_F");
  // phi_l and phi_l' vanish at +-1, so <phi_k'', (w phi_l)''>_{L2} equals
  // the weighted integral of phi_k'''' phi_l.
  const int max_degree = n + 3;
  const ChebGaussRule rule(2 * max_degree + 16);
  const Eigen::Index q = rule.nodes.size();
  Eigen::MatrixXd fourth(q, n), values(q, n);
  for (int k = 0; k < n; ++k) {
    ChebSeries d = phi_series(k);
    for (int i = 0; i < 4; ++i) d = cheb_differentiate(d);
    const ChebSeries p = phi_series(k);
    for (Eigen::Index j = 0; j < q; ++j) {
      fourth(j, k) = cheb_eval(d, rule.nodes[j]);
      values(j, k) = cheb_eval(p, rule.nodes[j]);
    }
  }
  return values.transpose() * rule.weights.asDiagonal() * fourth;
}

Eigen::VectorXd assemble_input_vector(const Profile& profile, int n) {
  require_basis_size(n, 1, "assemble_input_vector");
  const ChebSeries q = cheb_interpolate(profile, profile_degree(n));
  const ChebSeries dq = cheb_differentiate(q);
  for (double x : {-1.0, 1.0}) {
    if (std::abs(cheb_eval(q, x)) > kBoundaryTol ||
        std::abs(cheb_eval(dq, x)) > kBoundaryTol) {
      std::cerr << "warning: input profile does not satisfy clamped boundary "
                   "conditions at xi = "
                << x << '\n';
      break;
    }
  }
  Eigen::VectorXd v(n);
  for (int l = 0; l < n; ++l) {
    v[l] = cheb_norm_sq(l) * q.coeff(l) -
           2.0 * (l + 2.0) / (l + 3.0) * cheb_norm_sq(l + 2) * q.coeff(l + 2) +
           (l + 1.0) / (l + 3.0) * cheb_norm_sq(l + 4) * q.coeff(l + 4);
  }
  return v;
}

Eigen::MatrixXd assemble_output_matrix(double xi1, double xi2, int n) {
  require_basis_size(n, 1, "assemble_output_matrix");
  for (double xi : {xi1, xi2}) {
    if (!(std::abs(xi) <= 1.0)) {
      throw ValidationError("assemble_output_matrix: point outside [-1, 1]");
    }
  }
  // T_k(xi) = cos(k acos xi), evaluated independently of Clenshaw.
  auto T = [](int k, double xi) { return std::cos(k * std::acos(xi)); };
  Eigen::MatrixXd C0(2, n);
  for (int k = 0; k < n; ++k) {
    const double a = -2.0 * (k + 2.0) / (k + 3.0);
    const double b = (k + 1.0) / (k + 3.0);
    int row = 0;
    for (double xi : {xi1, xi2}) {
      C0(row++, k) = T(k, xi) + a * T(k + 2, xi) + b * T(k + 4, xi);
    }
  }
  return C0;
}

GalerkinModel assemble_first_order(const BeamParameters& params, int n) {
  require_basis_size(n, 5, "assemble_first_order");
  GalerkinModel g;
  g.n = n;
  g.M = assemble_M(n);
  g.F = assemble_F(n);

  g.B0.resize(n, 2);
  g.B0.col(0) = assemble_input_vector(params.b1, n);
  g.B0.col(1) = assemble_input_vector(params.b2, n);
  g.Bd0.resize(n, static_cast<Eigen::Index>(params.b_d.size()));
  for (std::size_t k = 0; k < params.b_d.size(); ++k) {
    g.Bd0.col(static_cast<Eigen::Index>(k)) = assemble_input_vector(params.b_d[k], n);
  }
  g.C0 = assemble_output_matrix(params.xi1, params.xi2, n);

  const Eigen::LLT<Eigen::MatrixXd> mass(g.M);
  if (mass.info() != Eigen::Success || !(mass.rcond() > 1e-14)) {
    throw NumericalError("assemble_first_order: mass matrix is numerically "
                         "singular for n = " + std::to_string(n));
  }
  const Eigen::MatrixXd MinvF = mass.solve(g.F);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  g.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  g.A.topRightCorner(n, n) = I;
  g.A.bottomLeftCorner(n, n) = -params.E * params.I_mom * MinvF;
  g.A.bottomRightCorner(n, n) = -params.d_KV * params.I_mom * MinvF - params.d_v * I;

  g.B = Eigen::MatrixXd::Zero(2 * n, 2);
  g.B.bottomRows(n) = mass.solve(g.B0);
  g.Bd = Eigen::MatrixXd::Zero(2 * n, g.Bd0.cols());
  g.Bd.bottomRows(n) = mass.solve(g.Bd0);
  g.C = Eigen::MatrixXd::Zero(2, 2 * n);
  g.C.leftCols(n) = g.C0;
  return g;
}

NormGrams norm_grams(const BeamParameters& params, int n) {
  require_basis_size(n, 5, "norm_grams");
  const Eigen::MatrixXd M = assemble_M(n);
  const Eigen::MatrixXd F = assemble_F(n);
  NormGrams g;
  g.G_V0 = params.E * params.I_mom * 0.5 * (F + F.transpose());
  if (Eigen::LLT<Eigen::MatrixXd>(g.G_V0).info() != Eigen::Success) {
    throw NumericalError("norm_grams: V0 Gram matrix not positive definite for n = " +
                         std::to_string(n));
  }
  g.G_X = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  g.G_X.topLeftCorner(n, n) = g.G_V0;
  g.G_X.bottomRightCorner(n, n) = M;
  g.G_V = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  g.G_V.topLeftCorner(n, n) = g.G_V0;
  g.G_V.bottomRightCorner(n, n) = g.G_V0;

  // ||f||_w^2 <= beta^2 ||f||_V0^2 with beta^2 the top eigenvalue of
  // M v = lambda G_V0 v.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(M, g.G_V0);
  if (ges.info() != Eigen::Success) {
    throw NumericalError("norm_grams: generalized eigensolver failed");
  }
  g.beta_hat = std::sqrt(ges.eigenvalues().maxCoeff());
  return g;
}

SesquilinearForm::SesquilinearForm(const BeamParameters& params, int n, Mode mode)
    : n_(n),
      mode_(mode),
      E_(params.E),
      I_mom_(params.I_mom),
      d_KV_(params.d_KV),
      d_v_(params.d_v),
      M_(assemble_M(n)),
      F_(assemble_F(n)),
      grams_(norm_grams(params, n)) {}

double SesquilinearForm::value(const Eigen::VectorXd& phi,
                               const Eigen::VectorXd& psi) const {
  if (phi.size() != 2 * n_ || psi.size() != 2 * n_) {
    throw ValidationError("SesquilinearForm: coordinate length mismatch (expected " +
                          std::to_string(2 * n_) + ")");
  }
  const auto phi1 = phi.head(n_), phi2 = phi.tail(n_);
  const auto psi1 = psi.head(n_), psi2 = psi.tail(n_);
  const Eigen::MatrixXd& G = grams_.G_V0;
  double stiff = 0.0, kv = 0.0;
  if (mode_ == Mode::kRaw) {
    stiff = E_ * I_mom_ * psi2.dot(F_ * phi1);
    kv = d_KV_ * I_mom_ * psi2.dot(F_ * phi2);
  } else {
    stiff = psi2.dot(G * phi1);
    kv = (d_KV_ / E_) * psi2.dot(G * phi2);
  }
  return -psi1.dot(G * phi2) + stiff + kv + d_v_ * psi2.dot(M_ * phi2);
}

}  // namespace kvbeam
