#include "kvbeam/galerkin.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "kvbeam/chebyshev.h"
#include "kvbeam/errors.h"
#include "kvbeam/matrix_equations.h"

namespace kvbeam {
namespace {

using std::numbers::pi;

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) == 0.0) continue;  // structural zeros: see max_abs_outside
      const double scale = std::abs(a(i, j));
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / scale);
    }
  }
  return worst;
}

// Entries that are structurally zero must be (near) zero in the oracle too.
double max_abs_outside(const Eigen::MatrixXd& closed, const Eigen::MatrixXd& oracle) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < closed.rows(); ++i) {
    for (Eigen::Index j = 0; j < closed.cols(); ++j) {
      if (closed(i, j) == 0.0) worst = std::max(worst, std::abs(oracle(i, j)));
    }
  }
  return worst;
}

GTEST_TEST(AssembleM, ClosedFormEntries) {
  const Eigen::MatrixXd M = assemble_M(6);
  EXPECT_NEAR(M(0, 0), 35 * pi / 18, 1e-14);
  EXPECT_NEAR(M(1, 1), 7 * pi / 4, 1e-14);
  EXPECT_EQ(M(0, 1), 0.0);
  EXPECT_TRUE(M.isApprox(M.transpose(), 0.0));
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(M).info(), Eigen::Success);
}

GTEST_TEST(AssembleF, ClosedFormEntries) {
  const Eigen::MatrixXd F = assemble_F(6);
  EXPECT_NEAR(F(0, 0), 64 * pi, 1e-12);
  EXPECT_NEAR(F(0, 2), 768 * pi / 5, 1e-12);
  EXPECT_EQ(F(2, 0), 0.0);
}

GTEST_TEST(ClosedFormMatrices, SparsityPatterns) {
  const int n = 25;
  const Eigen::MatrixXd M = assemble_M(n), F = assemble_F(n);
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      const int d = std::abs(l - k);
      if (d != 0 && d != 2 && d != 4) EXPECT_EQ(M(l, k), 0.0) << l << "," << k;
      if (d == 0 || d == 2 || d == 4) EXPECT_NE(M(l, k), 0.0) << l << "," << k;
      const bool f_allowed = k >= l && (k - l) % 2 == 0;
      if (!f_allowed) EXPECT_EQ(F(l, k), 0.0) << l << "," << k;
      if (f_allowed) EXPECT_NE(F(l, k), 0.0) << l << "," << k;
    }
  }
}

GTEST_TEST(ClosedFormMatrices, MatchesOraclesSmall) {
  EXPECT_LE(max_rel_diff(assemble_M(5), oracle_M(5)), 1e-10);
  EXPECT_LE(max_rel_diff(assemble_F(5), oracle_F(5)), 1e-8);
  EXPECT_NEAR(oracle_M(1)(0, 0), 35 * pi / 18, 1e-14);
}

GTEST_TEST(ClosedFormMatrices, MatchesOraclesUpTo40) {
  for (int n : {1, 2, 7, 16, 31, 40}) {
    const Eigen::MatrixXd M = assemble_M(n), Mo = oracle_M(n);
    const Eigen::MatrixXd F = assemble_F(n), Fo = oracle_F(n);
    EXPECT_LE(max_rel_diff(M, Mo), 1e-8) << "n=" << n;
    EXPECT_LE(max_rel_diff(F, Fo), 1e-8) << "n=" << n;
    EXPECT_LE(max_abs_outside(M, Mo), 1e-12 * Mo.cwiseAbs().maxCoeff()) << "n=" << n;
    EXPECT_LE(max_abs_outside(F, Fo), 1e-12 * Fo.cwiseAbs().maxCoeff()) << "n=" << n;
  }
}

GTEST_TEST(AssembleInputVector, ZeroAndBasisProfiles) {
  const int n = 12;
  EXPECT_TRUE(assemble_input_vector([](double) { return 0.0; }, n).isZero(0.0));
  const ChebSeries p0 = phi_series(0);
  const Eigen::VectorXd v = assemble_input_vector([&](double x) { return cheb_eval(p0, x); }, n);
  EXPECT_LE((v - assemble_M(n).col(0)).cwiseAbs().maxCoeff(), 1e-13);
}

GTEST_TEST(AssembleInputVector, MatchesQuadrature) {
  const int n = 39;
  const BeamParameters bp = BeamParameters::reference();
  const Eigen::VectorXd v = assemble_input_vector(bp.b1, n);
  const ChebGaussRule rule(2 * (n + 8) + 16);
  for (int l = 0; l < n; ++l) {
    const ChebSeries p = phi_series(l);
    const double q = rule.integrate([&](double x) { return bp.b1(x) * cheb_eval(p, x); });
    EXPECT_NEAR(v[l], q, 1e-10 * std::max(1.0, std::abs(q))) << "l=" << l;
  }
}

GTEST_TEST(AssembleOutputMatrix, Values) {
  const Eigen::MatrixXd C0 = assemble_output_matrix(0.0, 0.4, 30);
  EXPECT_NEAR(C0(0, 0), 8.0 / 3.0, 1e-14);
  for (int k = 0; k < 30; ++k) {
    EXPECT_NEAR(C0(0, k), cheb_eval(phi_series(k), 0.0), 1e-12);
    EXPECT_NEAR(C0(1, k), cheb_eval(phi_series(k), 0.4), 1e-12);
  }
  const Eigen::MatrixXd Cb = assemble_output_matrix(1.0, -1.0, 30);
  EXPECT_LE(Cb.cwiseAbs().maxCoeff(), 1e-12);
}

GTEST_TEST(AssembleFirstOrder, DimensionsAndBlocks) {
  const BeamParameters bp = BeamParameters::reference();
  const GalerkinModel g = assemble_first_order(bp, 39);
  EXPECT_EQ(g.state_dim(), 78);
  EXPECT_EQ(g.A.rows(), 78);
  EXPECT_EQ(g.B.cols(), 2);
  EXPECT_EQ(g.C.rows(), 2);
  EXPECT_EQ(g.Bd.cols(), 1);
  const int n = g.n;
  EXPECT_TRUE(g.A.topLeftCorner(n, n).isZero(0.0));
  EXPECT_TRUE(g.A.topRightCorner(n, n).isIdentity(0.0));
  // M * (lower blocks) reproduces -E I F and -d_KV I F - d_v M.
  const Eigen::MatrixXd lower_left = g.M * g.A.bottomLeftCorner(n, n);
  const Eigen::MatrixXd lower_right = g.M * g.A.bottomRightCorner(n, n);
  const double fs = g.F.norm();
  EXPECT_LE((lower_left + bp.E * bp.I_mom * g.F).norm(), 1e-10 * fs);
  EXPECT_LE((lower_right + bp.d_KV * bp.I_mom * g.F + bp.d_v * g.M).norm(), 1e-10 * fs);
  EXPECT_LE((g.M * g.B.bottomRows(n) - g.B0).norm(), 1e-12 * g.B0.norm());
  EXPECT_TRUE(g.B.topRows(n).isZero(0.0));
  EXPECT_TRUE(g.C.rightCols(n).isZero(0.0));
  EXPECT_TRUE(g.C.leftCols(n).isApprox(g.C0, 0.0));
}

GTEST_TEST(AssembleFirstOrder, OpenLoopMargin) {
  const GalerkinModel g = assemble_first_order(BeamParameters::reference(), 39);
  const double margin = stability_margin(g.A);
  EXPECT_NEAR(margin, 0.35, 0.05);
}

GTEST_TEST(AssembleFirstOrder, UndampedBeamIsMarginallyStable) {
  BeamParameters bp = BeamParameters::reference();
  bp.d_KV = 0.0;
  bp.d_v = 0.0;
  const GalerkinModel g = assemble_first_order(bp, 20);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(g.A, false).eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) EXPECT_GE(ev[i].real(), -1e-8);
}

GTEST_TEST(AssembleFirstOrder, RejectsSmallBasis) {
  EXPECT_THROW(assemble_first_order(BeamParameters::reference(), 4), ValidationError);
}

GTEST_TEST(BeamParameters, Validation) {
  BeamParameters bp = BeamParameters::reference();
  EXPECT_NO_THROW(bp.validate());
  bp.d_KV = 0.0;
  EXPECT_THROW(bp.validate(), ValidationError);
  EXPECT_NO_THROW(bp.validate(true));
  bp = BeamParameters::reference();
  bp.b1 = [](double x) { return 1.0 - x * x; };  // derivative nonzero at the ends
  EXPECT_THROW(bp.validate(), ValidationError);
  bp = BeamParameters::reference();
  bp.xi2 = 1.0;
  EXPECT_THROW(bp.validate(), ValidationError);
}

GTEST_TEST(NormGrams, PositiveDefiniteAndBeta) {
  const BeamParameters bp = BeamParameters::reference();
  for (int n : {5, 39, 69}) {
    const NormGrams g = norm_grams(bp, n);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.G_V0).eigenvalues();
    EXPECT_GT(ev.minCoeff(), 0.0) << "n=" << n;
    EXPECT_GT(g.beta_hat, 0.0);
    EXPECT_TRUE(std::isfinite(g.beta_hat));
  }
  const NormGrams g = norm_grams(bp, 10);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(20);
  phi[10] = 1.0;
  EXPECT_NEAR(phi.dot(g.G_X * phi), 35 * pi / 18, 1e-13);
}

GTEST_TEST(NormGrams, BetaBoundsWeightedNorm) {
  const BeamParameters bp = BeamParameters::reference();
  const int n = 30;
  const NormGrams g = norm_grams(bp, n);
  const Eigen::MatrixXd M = assemble_M(n);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd f(n);
    for (auto& v : f) v = nd(rng);
    EXPECT_LE(std::sqrt(f.dot(M * f)),
              g.beta_hat * std::sqrt(f.dot(g.G_V0 * f)) * (1 + 1e-12));
  }
}

GTEST_TEST(SesquilinearForm, Examples) {
  const BeamParameters bp = BeamParameters::reference();
  const int n = 8;
  const SesquilinearForm a(bp, n);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(2 * n);
  phi[0] = 1.0;
  EXPECT_EQ(a.value(phi, phi), 0.0);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(2 * n);
  e[n] = 1.0;
  EXPECT_NEAR(a.value(e, e), bp.d_KV * bp.I_mom * 64 * pi + bp.d_v * 35 * pi / 18, 1e-12);
  EXPECT_THROW(a.value(Eigen::VectorXd::Zero(3), e), ValidationError);
}

class FormPropertySuite : public ::testing::Test {
 protected:
  static constexpr int kN = 39;
  static constexpr int kDraws = 1000;

  Eigen::VectorXd draw() {
    Eigen::VectorXd v(2 * kN);
    // Decaying coefficients keep both low and high modes in play.
    for (int i = 0; i < 2 * kN; ++i) v[i] = nd_(rng_) / (1.0 + (i % kN));
    return v;
  }

  BeamParameters bp_ = BeamParameters::reference();
  std::mt19937 rng_{2024};
  std::normal_distribution<double> nd_;
};

GTEST_TEST(SesquilinearForm, RawFormMatchesGeneratorIdentity) {
  const BeamParameters bp = BeamParameters::reference();
  const int n = 39;
  const GalerkinModel g = assemble_first_order(bp, n);
  const SesquilinearForm a(bp, n, SesquilinearForm::Mode::kRaw);
  const Eigen::MatrixXd& GX = a.grams().G_X;
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd phi(2 * n), psi(2 * n);
    for (auto& v : phi) v = nd(rng);
    for (auto& v : psi) v = nd(rng);
    const double lhs = psi.dot(GX * (g.A * phi));
    const double rhs = -a.value(phi, psi);
    const double scale = psi.cwiseAbs().dot(GX.cwiseAbs() * (g.A.cwiseAbs() * phi.cwiseAbs()));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
  }
}

TEST_F(FormPropertySuite, CoercivityIdentityAndInequality) {
  const SesquilinearForm a(bp_, kN, SesquilinearForm::Mode::kSymmetrized);
  const NormGrams& g = a.grams();
  const Eigen::MatrixXd M = assemble_M(kN);
  const double q2 = bp_.d_KV / bp_.E;
  for (int trial = 0; trial < kDraws; ++trial) {
    const Eigen::VectorXd phi = draw();
    const auto phi2 = phi.tail(kN);
    const double re_a = a.value(phi, phi);
    const double v2 = phi.dot(g.G_V * phi), x2 = phi.dot(g.G_X * phi);
    const double w2 = phi2.dot(M * phi2);
    // Exact: Re a = q2 ||phi2||_V0^2 + d_v ||phi2||_w^2
    //             = q2 (||phi||_V^2 - ||phi||_X^2) + (q2 + d_v) ||phi2||_w^2.
    const double identity = q2 * (v2 - x2) + (q2 + bp_.d_v) * w2;
    EXPECT_LE(std::abs(re_a - identity), 1e-8 * std::max(1.0, std::abs(re_a)));
    EXPECT_GE(re_a, q2 * v2 - q2 * x2 + bp_.d_v * w2 - 1e-8 * std::max(1.0, std::abs(re_a)));
  }
}

TEST_F(FormPropertySuite, Boundedness) {
  const SesquilinearForm a(bp_, kN, SesquilinearForm::Mode::kSymmetrized);
  const NormGrams& g = a.grams();
  const double q1 = 2 + bp_.d_KV / bp_.E + bp_.d_v * g.beta_hat * g.beta_hat;
  for (int trial = 0; trial < kDraws; ++trial) {
    const Eigen::VectorXd phi = draw(), psi = draw();
    const double lhs = std::abs(a.value(phi, psi));
    const double rhs = q1 * std::sqrt(phi.dot(g.G_V * phi)) * std::sqrt(psi.dot(g.G_V * psi));
    EXPECT_LE(lhs, rhs * (1 + 1e-12));
  }
}

}  // namespace
}  // namespace kvbeam
