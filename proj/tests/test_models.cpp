#include "mwlab/models.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mwlab;

TEST(Models, TwoStateStationary) {
  const auto m = two_state_model(0.3, 0.6);
  EXPECT_NEAR(m.stationary()[0], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(m.stationary()[1], 1.0 / 3.0, 1e-14);
}

TEST(Models, RandomChainStationaryMatchesPowerLimit) {
  for (Index states : {3, 7, 20}) {
    const auto m = random_chain(states, 11);
    const Matrix<double> limit = fixtures::naive_power(m, 400);
    EXPECT_LT((limit.row(0).transpose() - m.stationary()).cwiseAbs().maxCoeff(), 1e-12) << states;
    EXPECT_LT(m.stationarity_defect(), 1e-14);
  }
}

TEST(Models, ReducibleChainNamesClasses) {
  Matrix<double> P(4, 4);
  P << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0.2, 0.8, 0, 0, 0.4, 0.6;
  try {
    MarkovModel<double>::from_dense(P);
    FAIL() << "expected NotErgodic";
  } catch (const NotErgodic& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("reducible"), std::string::npos);
    EXPECT_NE(msg.find("{0,1}"), std::string::npos);
    EXPECT_NE(msg.find("{2,3}"), std::string::npos);
  }
}

TEST(Models, PeriodicChainNamesPeriod) {
  Matrix<double> P(3, 3);
  P << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  try {
    MarkovModel<double>::from_dense(P);
    FAIL() << "expected NotErgodic";
  } catch (const NotErgodic& e) {
    EXPECT_NE(std::string(e.what()).find("period 3"), std::string::npos);
  }
}

TEST(Models, RejectsBadRows) {
  Matrix<double> P(2, 2);
  P << 0.5, 0.4, 0.5, 0.5;
  EXPECT_THROW(MarkovModel<double>::from_dense(P), InvalidArgument);
}

TEST(Renewal, MeanReturnTime) {
  const auto chain = build_renewal_chain({3.0, 4096});
  const double exact = std::riemann_zeta(2.0) / std::riemann_zeta(3.0);
  EXPECT_NEAR(chain.mean_return, exact, 1e-3);
  EXPECT_NEAR(chain.return_law.sum(), 1.0, 1e-14);
  EXPECT_NEAR(chain.model.stationary()[0], 1.0 / chain.mean_return, 1e-12);
  EXPECT_TRUE(chain.second_moment_diverges);
}

TEST(Renewal, SecondMomentGrowsLogarithmically) {
  // E tau^2 truncated at N is c (H_{N-1}) + lumped tail; doubling N adds about c log 2.
  const auto a = build_renewal_chain({3.0, 2048});
  const auto b = build_renewal_chain({3.0, 4096});
  const double c = 1.0 / std::riemann_zeta(3.0);
  EXPECT_NEAR(b.second_moment_return - a.second_moment_return, c * std::log(2.0), 1e-3);
}

TEST(Renewal, RejectsLightTailExponents) {
  EXPECT_THROW(build_renewal_chain({2.0, 100}), InvalidArgument);
  EXPECT_THROW(build_renewal_chain({3.0, 2}), InvalidArgument);
}

TEST(Paths, OccupationWithinBinomialBand) {
  const auto m = fixtures::reference_two_state();
  const auto path = simulate_path(m, 0, 100000, 5, 0);
  double visits = 0, from0 = 0, jumps = 0;
  for (std::int64_t t = 0; t < path.horizon; ++t) {
    visits += path.at(t) == 0;
    if (t + 1 < path.horizon && path.at(t) == 0) {
      from0 += 1;
      jumps += path.at(t + 1) == 1;
    }
  }
  // Var of the occupation mean is about sigma^2 / n with sigma^2 = (2/9)(1.1/0.9).
  const double sd = std::sqrt((2.0 / 9.0) * (1.1 / 0.9) / 1e5);
  EXPECT_NEAR(visits / 1e5, 2.0 / 3.0, 5 * sd);
  EXPECT_NEAR(jumps / from0, 0.3, 5 * std::sqrt(0.21 / from0));
}

TEST(Paths, DeterministicAndStreamable) {
  const auto m = random_chain(6, 3);
  const auto a = simulate_path(m, -50, 200, 9, 4);
  const auto b = simulate_path(m, -50, 200, 9, 4);
  EXPECT_EQ(a.states, b.states);
  const auto streamed = simulate_path(m, -50, 200, 9, 4, 10);
  ASSERT_TRUE(streamed.streamed());
  std::vector<std::int32_t> regenerated;
  for_each_state(m, streamed, [&](std::int64_t, Index w) { regenerated.push_back(static_cast<std::int32_t>(w)); });
  EXPECT_EQ(regenerated, a.states);
  EXPECT_NE(simulate_path(m, -50, 200, 9, 5).states, a.states);
}

TEST(Paths, RejectsBadWindow) {
  const auto m = fixtures::reference_two_state();
  EXPECT_THROW(simulate_path(m, 1, 10, 0, 0), InvalidArgument);
  EXPECT_THROW(simulate_path(m, 0, 0, 0, 0), InvalidArgument);
}

TEST(Observables, CenteringAndGridNorm) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  EXPECT_NEAR(f.values(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.values(1, 0), -2.0 / 3.0, 1e-15);
  EXPECT_TRUE(is_centered(m, f));
  EXPECT_THROW(require_centered(m, Observable<double>::scalar(Vector<double>::Ones(2)), "t"), InvalidArgument);

  auto grid = QuadratureGrid<double>::trapezoid(0.0, 1.0, 3);
  EXPECT_DOUBLE_EQ(grid.mass(), 1.0);
  Matrix<double> v(1, 3);
  v << 1.0, -2.0, 2.0;
  const auto g = Observable<double>::on_grid(v, grid, 1.0);
  EXPECT_DOUBLE_EQ(g.point_norm(v.row(0)), 0.25 * 1 + 0.5 * 2 + 0.25 * 2);
}
