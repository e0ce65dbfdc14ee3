#include "mwlab/limits.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace mwlab;

namespace {

/// Exact Normal(0, sigma^2) quantiles at (i + 1/2)/M.
std::vector<double> normal_quantile_sample(std::size_t M, double sigma) {
  std::vector<double> out;
  for (std::size_t i = 0; i < M; ++i) {
    const double u = (double(i) + 0.5) / double(M);
    // Bisection on the cdf; independent of the library's inverse.
    double lo = -10 * sigma, hi = 10 * sigma;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / (sigma * std::sqrt(2.0))) < u ? lo : hi) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

}  // namespace

TEST(Statistics, NormalCdf) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0, 2.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054 * 3.0, 3.0), 0.975, 1e-12);
}

TEST(Statistics, KsOfExactQuantilesIsHalfStep) {
  const auto sample = normal_quantile_sample(1000, 1.7);
  EXPECT_NEAR(ks_normal(sample, 1.7), 0.5 / 1000, 1e-9);
  EXPECT_GT(ks_normal(sample, 1.0), 0.1);
}

TEST(Statistics, KsTwoSample) {
  std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, a), 0.0);
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b), 1.0);
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 3}, {2, 4}), 0.5);
}

TEST(Statistics, CorrelationOfDependentColumns) {
  Matrix<double> x(5, 3);
  x.col(0) << 1, 2, 3, 4, 5;
  x.col(1) = -2 * x.col(0);
  x.col(2) << 1, -1, 0, -1, 1;
  const auto c = correlation(x);
  EXPECT_NEAR(c(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(c(0, 2), 0.0, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(c(i, i), 1.0, 1e-12);
}

TEST(Statistics, GeometricCheckpoints) {
  const auto cp = geometric_checkpoints(1000, 100000, 4);
  ASSERT_GE(cp.size(), 9u);
  EXPECT_EQ(cp.front(), 1000);
  EXPECT_EQ(cp.back(), 100000);
  for (std::size_t i = 1; i < cp.size(); ++i) {
    EXPECT_GT(cp[i], cp[i - 1]);
    if (i + 1 < cp.size()) EXPECT_NEAR(double(cp[i]) / double(cp[i - 1]), std::pow(10.0, 0.25), 0.01);
  }
  EXPECT_THROW(geometric_checkpoints(0, 10, 4), InvalidArgument);
}

TEST(DualNet, UnitDualNorm) {
  const auto m = random_chain(3, 4);
  const auto grid = QuadratureGrid<double>::trapezoid(0.0, 2.0, 33);
  for (double p : {1.0, 1.5, 2.0, 4.0}) {
    const auto f = Field::on_grid(Matrix<double>::Random(3, 33), grid, p);
    const auto net = dual_net(f, 4);
    EXPECT_EQ(net.rows(), 1 + 4 + 1);
    for (Index r = 0; r < net.rows(); ++r) {
      double norm;
      if (p == 1.0) {
        norm = net.row(r).cwiseAbs().maxCoeff();
      } else {
        const double q = p / (p - 1);
        norm = std::pow((grid.weights.transpose().array() * net.row(r).array().abs().pow(q)).sum(), 1 / q);
      }
      EXPECT_NEAR(norm, 1.0, 1e-12) << "p=" << p << " row " << r;
    }
  }
}

TEST(Clt, TwoStateSigmaAndKs) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto r = clt_experiment(m, f, 1000, 4000, 11);
  // pi_0 pi_1 (1 + lambda)/(1 - lambda) with lambda = 0.1.
  EXPECT_NEAR(r.scalar("sigma2"), (2.0 / 9.0) * 1.1 / 0.9, 1e-12);
  EXPECT_LT(r.scalar("ks_statistic"), 0.03);
  EXPECT_NEAR(r.scalar("sample_variance"), r.scalar("sigma2"), 0.05 * r.scalar("sigma2"));
}

TEST(Clt, DegenerateInputThrows) {
  const auto m = random_chain(4, 9);
  const auto f = Field::scalar(Vector<double>::Zero(4));
  EXPECT_THROW(clt_experiment(m, f, 100, 50, 1), DegenerateLimit);
}

TEST(Clt, IndependentOfThreadCount) {
  const auto m = random_chain(5, 3);
  const auto f = fixtures::random_observable(m, 3);
  LimitOptions one{1}, four{4};
  const auto a = clt_experiment(m, f, 200, 300, 5, one);
  const auto b = clt_experiment(m, f, 200, 300, 5, four);
  EXPECT_EQ(a.scalar("ks_statistic"), b.scalar("ks_statistic"));
  EXPECT_EQ(a.scalar("sample_mean"), b.scalar("sample_mean"));
}

TEST(Clt, GridObservableCovariance) {
  const auto m = random_chain(4, 6);
  const auto grid = QuadratureGrid<double>::trapezoid(0.0, 1.0, 9);
  Matrix<double> v(4, 9);
  const CounterRng rng(6, 1);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(i) - 0.5;
  const auto f = center_observable(m, Field::on_grid(v, grid, 2.0));
  const auto r = clt_experiment(m, f, 400, 3000, 2);
  EXPECT_LT(r.scalar("covariance_max_error"), 0.1);
  EXPECT_EQ(r.table("ks_directions").rows.size(), 6u);
}

TEST(Fdd, IncrementsIndependentGaussian) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto r = fdd_experiment(m, f, {0.25, 0.5, 1.0}, 2000, 2000, 8);
  EXPECT_EQ(r.table("increments").rows.size(), 3u);
  EXPECT_TRUE(r.verdict("increments_uncorrelated").passed);
  EXPECT_TRUE(r.verdict("variance_proportional").passed);
}

TEST(Fdd, RejectsUnsortedTimes) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  EXPECT_THROW(fdd_experiment(m, f, {0.5, 0.25}, 100, 10, 1), InvalidArgument);
  EXPECT_THROW(fdd_experiment(m, f, {1.5}, 100, 10, 1), InvalidArgument);
}

TEST(Lil, ZeroObservableStaysAtZero) {
  const auto m = random_chain(4, 2);
  const auto f = Field::scalar(Vector<double>::Zero(4));
  const auto r = lil_experiment(m, f, 5000, 1);
  EXPECT_EQ(r.scalar("final_running_max"), 0.0);
  EXPECT_EQ(r.scalar("target_sigma"), 0.0);
  EXPECT_TRUE(r.verdict("mw2_bound").passed);
}

TEST(Lil, ShortHorizonBandIsInformational) {
  const auto m = fixtures::reference_two_state();
  const auto f = fixtures::centered_indicator(m);
  const auto r = lil_experiment(m, f, 20000, 3);
  EXPECT_TRUE(r.verdict("lil_band").informational);
  EXPECT_TRUE(r.verdict("mw2_bound").passed);
  // Both normalizations differ by sqrt(2).
  EXPECT_NEAR(r.scalar("final_running_max_nlln"), std::sqrt(2.0) * r.scalar("final_running_max"), 1e-12);
}

TEST(Lil, Reproducible) {
  const auto m = random_chain(6, 8);
  const auto f = fixtures::random_observable(m, 8);
  EXPECT_EQ(lil_experiment(m, f, 3000, 4).scalar("final_running_max"),
            lil_experiment(m, f, 3000, 4).scalar("final_running_max"));
}

TEST(Counterexample, WeightRules) {
  EXPECT_EQ(parse_weight_rule("inv_loglog"), WeightRule::inv_loglog);
  EXPECT_THROW(parse_weight_rule("inv_cube"), InvalidArgument);
  EXPECT_DOUBLE_EQ(weight(WeightRule::one, 100), 1.0);
  EXPECT_NEAR(weight(WeightRule::inv_log, 100), 1 / std::log(100.0), 1e-15);
  EXPECT_NEAR(weight(WeightRule::inv_sqrt_log, 100), 1 / std::sqrt(std::log(100.0)), 1e-15);
}

TEST(Counterexample, FiniteSecondMomentRejected) {
  EXPECT_THROW(counterexample_experiment({4.0, 256}, 1), InvalidArgument);
}

TEST(Counterexample, SmallRunProducesTables) {
  CounterexampleOptions ce;
  ce.series_terms = 2000;
  ce.sensitivity_truncations = {128};
  ce.variance_ns = {10, 100, 1000};
  ce.horizon = 20000;
  ce.empirical_from = 1000;
  ce.seeds = 3;
  ce.required_increases = 0;
  const auto r = counterexample_experiment({3.0, 256}, 5, ce);
  EXPECT_TRUE(r.verdict("variance_strictly_increasing").passed);
  EXPECT_TRUE(r.verdict("second_moment_diverges").passed);
  EXPECT_EQ(r.table("series_sensitivity").rows.size(), 2u);
  EXPECT_EQ(r.table("variance_growth").rows.size(), 3u);
  // Partial sums of the weighted series are nondecreasing.
  const auto& rows = r.table("weighted_series").rows;
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i][3], rows[i - 1][3]);
}
