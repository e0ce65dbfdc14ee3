// Monte Carlo experiments for the limit theorems and the renewal counterexample.
//
// Path j of an experiment is stream j of the experiment seed, so every random
// quantity is traceable to (seed, stream) and independent of the worker count.
#pragma once

#include "mwlab/maximal.hpp"
#include "mwlab/result.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mwlab {

using Model = MarkovModel<double>;
using Field = Observable<double>;

struct LimitOptions {
  unsigned threads = default_threads();
  /// Blocks in the dual direction net for grid observables.
  int net_blocks = 4;
};

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

double normal_cdf(double x, double sigma);

/// Kolmogorov-Smirnov distance between the sample and Normal(0, sigma^2).
double ks_normal(std::vector<double> sample, double sigma);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Pearson correlation matrix of the columns.
Matrix<double> correlation(const Matrix<double>& samples);

/// Geometric checkpoints first, first*10^{1/per_decade}, ... below horizon,
/// plus horizon itself; rounded and deduplicated.
std::vector<std::int64_t> geometric_checkpoints(std::int64_t first, std::int64_t horizon, int per_decade);

// ---------------------------------------------------------------------------
// Dual directions for grid observables
// ---------------------------------------------------------------------------

/// Finite net of dual vectors u (rows) with (sum_i w_i |u_i|^q)^{1/q} = 1,
/// q conjugate to p: the constant direction, the normalized indicator of
/// each of `blocks` contiguous grid blocks, and the half-split sign pattern.
/// x*(x) = sum_i w_i u_i x_i. A scalar observable has the single direction 1.
Matrix<double> dual_net(const Field& f, int blocks);

/// The real observable x*(f) for the dual vector u.
Field project(const Field& f, const RowVector<double>& u);

/// sigma_u = ||x*(d)||_2 for each net direction.
std::vector<double> directional_sigmas(const Model& model, const MartingaleDifference<double>& d,
                                       const Matrix<double>& net);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// S_n/sqrt(n) over M stationary paths against Normal(0, K). Scalar: KS
/// against Normal(0, sigma^2), plus the KS distance between the f- and
/// d-versions. Grid: per-direction KS over the dual net and the empirical
/// covariance of the projections against the exact one.
/// Throws DegenerateLimit when sigma^2 = 0.
ExperimentResult clt_experiment(const Model& model, const Field& f, std::int64_t n, std::uint64_t M,
                                std::uint64_t seed, const LimitOptions& opt = {}, double ks_threshold = 0.03);

/// Increments of the polygonal process T_{n,t} = S_{n,t}/sqrt(n) at the given
/// times (strictly increasing in [0, 1]): per-increment KS against
/// Normal(0, (t_i - t_{i-1}) sigma^2), variance ratios, and cross-increment
/// correlations against the 3/sqrt(M) band. Grid observables use the constant
/// dual direction.
ExperimentResult fdd_experiment(const Model& model, const Field& f, const std::vector<double>& times,
                                std::int64_t n, std::uint64_t M, std::uint64_t seed, const LimitOptions& opt = {});

struct LilOptions {
  /// The running maximum is taken over burn_in <= n (small-n transients of
  /// the log-log normalizer are excluded).
  std::int64_t burn_in = 1000;
  int checkpoints_per_decade = 4;
  double band_low = 0.7;
  double band_high = 1.2;
};

/// One long path: running max over n >= burn_in of |S_n|/sqrt(2 n L(L(n)))
/// (primary) and |S_n|/sqrt(n L(L(n))) at geometric checkpoints, against the
/// target sup_{|x*|<=1} ||x*(d)||_2 (sigma for real f) and the upper bound
/// 10 sqrt(2) times the MW_2 partial sum at depth floor(log2 n).
ExperimentResult lil_experiment(const Model& model, const Field& f, std::int64_t horizon, std::uint64_t seed,
                                const LilOptions& lil = {}, const LimitOptions& opt = {});

enum class WeightRule { one, inv_log, inv_loglog, inv_sqrt_log };

WeightRule parse_weight_rule(const std::string& name);
std::string to_string(WeightRule rule);
double weight(WeightRule rule, std::int64_t n);

struct CounterexampleOptions {
  WeightRule rule = WeightRule::inv_log;
  /// Terms of sum_n a_n ||E_0(S_n)||_2 / n^{3/2}.
  std::int64_t series_terms = 100000;
  /// Truncations compared for tail sensitivity of the series (the spec
  /// truncation is always included).
  std::vector<Index> sensitivity_truncations{1024, 2048};
  std::vector<std::int64_t> variance_ns{100, 1000, 10000, 100000, 1000000};
  std::int64_t horizon = 1000000;
  std::int64_t empirical_from = 10000;
  std::uint64_t seeds = 10;
  std::uint64_t required_increases = 8;
  int checkpoints_per_decade = 2;
};

/// Renewal chain with X = 1{W_0 = 0} - pi_0: (a) the weighted series and its
/// sensitivity to the truncation, (b) exact Var(S_n)/n growth, (c) E tau^2
/// partial sums, (d) empirical max_{k<=n}|S_k|/sqrt(n L(L(n))) per seed.
/// Rejects tail_exponent outside (2, 3].
ExperimentResult counterexample_experiment(const RenewalSpec& spec, std::uint64_t seed,
                                           const CounterexampleOptions& ce = {}, const LimitOptions& opt = {});

/// Normalized grid sums S_n/sqrt(2 n L(L(n))) at checkpoints; diameter of the
/// trailing quarter of the trajectory and its distance to the ball of radius
/// max over the dual net of sigma_u. Informational.
ExperimentResult clil_diagnostic(const Model& model, const Field& f, std::int64_t horizon, std::uint64_t seed,
                                 const LimitOptions& opt = {}, int checkpoints_per_decade = 4);

}  // namespace mwlab
