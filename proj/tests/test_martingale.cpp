#include "mwlab/martingale.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mwlab;

TEST(Poisson, ResidualOnRandomChains) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Index states = 3 + static_cast<Index>(seed % 48);
    const auto m = random_chain(states, seed);
    const auto f = fixtures::random_observable(m, seed);
    const auto sol = solve_poisson(m, f);
    EXPECT_LE(sol.residual, 1e-10) << seed;
    EXPECT_LE(sol.mean_defect, 1e-10) << seed;
    // Independent residual computation.
    const Vector<double> r = sol.h.values.col(0) - m.dense_transition() * sol.h.values.col(0) - f.values.col(0);
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Poisson, TwoStateClosedForm) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto sol = solve_poisson(m, f);
  EXPECT_NEAR(sol.h.values(0, 0) - sol.h.values(1, 0), 10.0 / 9.0, 1e-14);
  EXPECT_NEAR(sol.h.values(0, 0), f.values(0, 0) / 0.9, 1e-14);
}

TEST(Poisson, IllConditionedChainRecommendsResolvent) {
  const auto m = two_state_model(1e-15, 1e-15);
  const auto f = fixtures::centered_indicator(m);
  try {
    solve_poisson(m, f);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("resolvent_approx"), std::string::npos);
  }
}

TEST(Martingale, VarianceMatchesAutocovarianceSeries) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto m = random_chain(3 + static_cast<Index>(seed % 48), seed);
    const auto f = fixtures::random_observable(m, seed + 100);
    const auto d = martingale_difference(m, f);
    EXPECT_NEAR(d.sigma2[0], autocovariance_series_variance(m, f, 400), 1e-8) << seed;
    EXPECT_LE(martingale_defect(m, d), 1e-12);
  }
}

TEST(Martingale, TwoStateVariance) {
  const auto m = fixtures::reference_two_state();
  const auto d = martingale_difference(m, fixtures::centered_indicator(m));
  EXPECT_NEAR(d.sigma2[0], (2.0 / 9.0) * (1.1 / 0.9), 1e-14);
  const auto half = two_state_model(0.5, 0.5);
  EXPECT_NEAR(martingale_difference(half, fixtures::centered_indicator(half)).sigma2[0], 0.25, 1e-12);
  EXPECT_NEAR(asymptotic_covariance(m, d).scalar(), d.sigma2[0], 1e-14);
}

TEST(Martingale, ApproximationErrorClosedForm) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto d = martingale_difference(m, f);
  // Ph = c f with c = lambda / (1 - lambda); error^2 = 2 c^2 pi(f^2) (1 - lambda^n).
  const double c = 0.1 / 0.9;
  QuadratureGrid<double> one;
  one.points = Vector<double>::Zero(1);
  one.weights = Vector<double>::Ones(1);
  const auto dg = martingale_difference(m, Observable<double>::on_grid(f.values, one, 2.0));
  for (std::uint64_t n : {1u, 2u, 7u, 40u}) {
    const double expect = std::sqrt(2 * c * c * (2.0 / 9.0) * (1 - std::pow(0.1, n)));
    EXPECT_NEAR(approximation_error(m, d, n), expect, 1e-14);
    EXPECT_NEAR(approximation_error(m, dg, n), expect, 1e-14);
  }
  EXPECT_EQ(approximation_error(m, d, 0), 0.0);
}

TEST(Martingale, ResolventApproachesPoissonSolution) {
  const auto m = random_chain(9, 3);
  const auto f = fixtures::random_observable(m, 4);
  const auto h = solve_poisson(m, f).h.values;
  const double e1 = (resolvent_approx(m, f, 1e-3).values - h).cwiseAbs().maxCoeff();
  const double e2 = (resolvent_approx(m, f, 1e-5).values - h).cwiseAbs().maxCoeff();
  EXPECT_LT(e2, 1e-4);
  EXPECT_LT(e2, e1);
  EXPECT_THROW(resolvent_approx(m, f, 0.0), InvalidArgument);
}

TEST(Martingale, CesaroDefectVanishes) {
  const auto m = random_chain(5, 6);
  const auto f = fixtures::random_observable(m, 2);
  const double a = cesaro_defect(m, f, 100), b = cesaro_defect(m, f, 1000);
  EXPECT_NEAR(b / a, 0.1, 1e-3);
}

TEST(Martingale, VarianceGrowthMatchesDoubleSum) {
  const auto m = random_chain(4, 12);
  const auto f = fixtures::random_observable(m, 12);
  const Vector<double> gamma = autocovariances(m, f, 64);
  const std::vector<std::int64_t> ns{1, 2, 10, 64};
  const auto growth = variance_growth(m, f, ns);
  ASSERT_EQ(growth.size(), ns.size());
  for (std::size_t j = 0; j < ns.size(); ++j) {
    double acc = 0;
    for (std::int64_t a = 0; a < ns[j]; ++a)
      for (std::int64_t b = 0; b < ns[j]; ++b) acc += gamma[std::abs(a - b)];
    EXPECT_NEAR(growth[j], acc / static_cast<double>(ns[j]), 1e-12);
  }
}

TEST(Martingale, GridCovarianceDiagonalMatchesColumns) {
  const auto m = random_chain(6, 1);
  Matrix<double> v = Matrix<double>::Random(6, 3);
  const auto f = center_observable(m, Observable<double>::on_grid(v, QuadratureGrid<double>::uniform(Vector<double>::LinSpaced(3, 0, 1)), 2.0));
  const auto cov = asymptotic_covariance(m, f);
  for (Index i = 0; i < 3; ++i) {
    const auto fi = center_observable(m, Observable<double>::scalar(v.col(i)));
    EXPECT_NEAR(cov.K(i, i), martingale_difference(m, fi).sigma2[0], 1e-12);
  }
  const Vector<double> w = Vector<double>::Ones(3), u = Vector<double>::Ones(3);
  EXPECT_NEAR(directional_variance(cov, w, u), cov.K.sum(), 1e-12);
}
