#include "mwlab/conditions.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace mwlab;

namespace {

double l2(const MarkovModel<double>& m, const Vector<double>& v) {
  return std::sqrt(m.stationary().dot(v.cwiseAbs2()));
}

Vector<double> iid_row() {
  Vector<double> row(4);
  row << 0.1, 0.2, 0.3, 0.4;
  return row;
}

}  // namespace

TEST(ConditionalSums, DoublingMatchesDirectSum) {
  const auto m = random_chain(8, 2);
  const auto f = fixtures::random_observable(m, 1);
  for (std::uint64_t n : {1u, 2u, 5u, 13u, 64u, 100u}) {
    Vector<double> direct = Vector<double>::Zero(8);
    for (std::uint64_t k = 0; k < n; ++k) direct += fixtures::naive_power(m, static_cast<long>(k)) * f.values.col(0);
    EXPECT_LT((conditional_sum_profile(m, f, n).col(0) - direct).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
  EXPECT_THROW(conditional_sum_profile(m, f, 0), InvalidArgument);
}

TEST(GaussianNorm, ScalarIsTwiceL2) {
  const auto m = random_chain(5, 4);
  const auto f = fixtures::random_observable(m, 2);
  EXPECT_NEAR(gaussian_norm(m, f), 2 * l2(m, f.values.col(0)), 1e-14);
}

TEST(GaussianNorm, GridFormsCoincideAtPTwo) {
  const auto m = random_chain(5, 4);
  Matrix<double> v = Matrix<double>::Random(5, 7);
  auto f = center_observable(m, Observable<double>::on_grid(v, QuadratureGrid<double>::trapezoid(0, 1, 7), 2.0));
  EXPECT_NEAR(pregaussian_cotype_form(m, f, f.values), pregaussian_type_form(m, f, f.values), 1e-12);
  f.p = 1.0;
  // Minkowski: the cotype form dominates the strong L^2(L^1) norm for p = 1.
  EXPECT_GE(pregaussian_cotype_form(m, f, f.values) + 1e-15, l2_norm(m, f, f.values));
}

TEST(Mw2, IidClosedForm) {
  const auto m = iid_model<double>(iid_row());
  Vector<double> v(4);
  v << 3.0, -1.0, 0.5, 2.0;
  const auto f = center_observable(m, Observable<double>::scalar(v));
  const auto trace = mw2_norm(m, f, 40);
  const double fg = 2 * l2(m, f.values.col(0));
  const double limit = fg / (1 - std::pow(2.0, -0.5));
  // The depth-40 partial misses exactly the geometric remainder.
  EXPECT_NEAR(trace.sum(), limit * (1 - std::pow(2.0, -41 / 2.0)), 1e-12);
  ASSERT_TRUE(trace.tail_estimate.has_value());
  EXPECT_NEAR(trace.sum() + *trace.tail_estimate, limit, 1e-6);
}

TEST(Mw2, TwoStateSpectralTerms) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const double lambda = 0.1;
  const double fg = 2 * l2(m, f.values.col(0));
  const auto trace = mw2_norm(m, f, 12);
  for (std::size_t n = 0; n < trace.terms.size(); ++n) {
    const double gnorm = fg * (1 - std::pow(lambda, std::pow(2.0, n))) / (1 - lambda);
    EXPECT_NEAR(trace.terms[n], gnorm / std::pow(2.0, n / 2.0), 1e-13) << n;
  }
}

TEST(Strengthened, TwoStateTermsAndDyadicDomination) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto s = strengthened_sum(m, f, 20);
  const double fg = 2 * l2(m, f.values.col(0));
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(s.terms[k], fg * std::pow(0.1, k) / std::sqrt(k + 1.0), 1e-14);
  }
  // MW2 partial at depth D <= (1 - 2^{-1/2})^{-1} x strengthened partial at 2^D.
  const double factor = 1 / (1 - std::pow(2.0, -0.5));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto chain = random_chain(6, seed);
    const auto g = fixtures::random_observable(chain, seed);
    for (int D : {0, 3, 6}) {
      const double mw2 = mw2_norm(chain, g, D).sum();
      const auto str = strengthened_sum(chain, g, 1L << D);
      EXPECT_LE(mw2, factor * str.sum() * (1 + 1e-12)) << seed << " " << D;
    }
  }
}

TEST(H2, TwoStateClosedForm) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto h = h2_norm(m, f, 30);
  const double var = 2.0 / 9.0;
  for (std::size_t n = 0; n < 6; ++n) {
    const double expect = std::sqrt(var * (std::pow(0.01, n) - std::pow(0.01, n + 1)));
    EXPECT_NEAR(h.terms[n], expect, 1e-14);
  }
}

TEST(H2, GridPairLawAgreesWithScalarFormula) {
  const auto m = random_chain(6, 8);
  const auto f = fixtures::random_observable(m, 3);
  QuadratureGrid<double> one;
  one.points = Vector<double>::Zero(1);
  one.weights = Vector<double>::Ones(1);
  auto g = Observable<double>::on_grid(f.values, one, 2.0);
  const auto a = h2_norm(m, f, 15);
  const auto b = h2_norm(m, g, 15);
  ASSERT_EQ(a.terms.size(), b.terms.size());
  for (std::size_t n = 0; n < a.terms.size(); ++n) EXPECT_NEAR(a.terms[n], b.terms[n], 1e-10);
}

TEST(Rho, TwoStateIsPowerOfLambda) {
  const auto m = fixtures::reference_two_state();
  for (std::uint64_t n : {1u, 2u, 5u}) EXPECT_NEAR(rho_maximal_correlation(m, n), std::pow(0.1, n), 1e-14);
  EXPECT_EQ(rho_maximal_correlation(m, 0), 1.0);
}

TEST(Rho, IidIsZeroAndGeneralMatchesEigenOracle) {
  const auto iid = iid_model<double>(iid_row());
  EXPECT_LT(rho_maximal_correlation(iid, 1), 1e-12);

  const auto m = random_chain(7, 5);
  // Oracle: second largest eigenvalue of A^T A for A = D^{1/2} P^3 D^{-1/2}.
  const Vector<double> r = m.stationary().cwiseSqrt();
  const Matrix<double> A = r.asDiagonal() * fixtures::naive_power(m, 3) * r.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(A.transpose() * A);
  const double oracle = std::sqrt(eig.eigenvalues()[eig.eigenvalues().size() - 2]);
  EXPECT_NEAR(rho_maximal_correlation(m, 3), oracle, 1e-12);
  EXPECT_LE(rho_maximal_correlation(m, 4), rho_maximal_correlation(m, 1) * rho_maximal_correlation(m, 3) + 1e-12);
}

TEST(Np, BranchesAgreeAtPTwoAndRejectScalar) {
  const auto m = random_chain(5, 9);
  Matrix<double> v = Matrix<double>::Random(5, 9);
  const auto f = center_observable(m, Observable<double>::on_grid(v, QuadratureGrid<double>::trapezoid(0, 2, 9), 2.0));
  const auto a = np_norm(m, f, 2.0, 20);
  const auto b = np_norm(m, f, 1.999999999999, 20);
  EXPECT_NEAR(a.sum(), b.sum(), 1e-9);
  EXPECT_THROW(np_norm(m, fixtures::random_observable(m, 1), 2.0, 5), InvalidArgument);
}

TEST(SeriesBuilder, CertifiesGeometricTail) {
  SeriesBuilder<double> b("geo", 0);
  for (int n = 0; n < 10; ++n) b.push(std::pow(0.5, n));
  const auto t = b.finish();
  ASSERT_TRUE(t.tail_estimate.has_value());
  EXPECT_NEAR(t.sum() + *t.tail_estimate, 2.0, 1e-14);
}

TEST(Conditions, UncenteredInputRejected) {
  const auto m = fixtures::reference_two_state();
  const auto f = Observable<double>::scalar(Vector<double>::Ones(2));
  EXPECT_THROW(mw2_norm(m, f, 3), InvalidArgument);
  EXPECT_THROW(strengthened_sum(m, f, 3), InvalidArgument);
  EXPECT_THROW(h2_norm(m, f, 3), InvalidArgument);
}
