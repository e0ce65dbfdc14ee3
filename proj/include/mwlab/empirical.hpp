// Empirical-process observables X_n(t) = 1{Y_n <= t} - F(t) with values in
// L^p(mu), their dependence coefficients and the D_{n,p}(mu) distance.
//
// With a Markov driver, P(Y_n <= t | F_0) = (P^n 1{y <= t})(W_0), so every
// coefficient is an exact finite computation over states and thresholds.
#pragma once

#include "mwlab/limits.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mwlab {

enum class DriverKind { markov, uniform };

/// Observation model: Y_n = y(W_n) for a Markov driver, or Y_n iid
/// Uniform(0, 1). mu is a quadrature grid with ascending points.
struct EmpiricalSetup {
  DriverKind driver = DriverKind::markov;
  Model model;
  Vector<double> y;  ///< observation per state (Markov driver)
  QuadratureGrid<double> grid;
  double p = 1.0;
  Vector<double> F;  ///< F(t_i) on the grid

  /// Integral of (1 - F)^p over t >= 0 plus F^p over t < 0 (finite grid).
  double moment_integral = 0;
  /// E |F_mu(Y_0)|^{2/p}.
  double moment_bis = 0;

  std::int64_t states() const { return driver == DriverKind::markov ? model.size() : 0; }
  /// The L^p(mu)-valued observable X_0 on the Markov driver.
  Field observable() const;
  /// Law of Y: sorted distinct values and their probabilities (Markov driver).
  std::pair<std::vector<double>, std::vector<double>> law() const;
};

EmpiricalSetup markov_setup(Model model, Vector<double> y, QuadratureGrid<double> grid, double p);
EmpiricalSetup uniform_setup(QuadratureGrid<double> grid, double p);

/// D_{n,p}(mu) = ||F_n - F||_{p,mu} for the sample.
double empirical_cdf_distance(const std::vector<double>& sample, const Vector<double>& F,
                              const QuadratureGrid<double>& grid, double p);

/// Observations from a headerless or single-header one-column CSV.
std::vector<double> read_samples_csv(const std::string& path);

struct CoefficientRow {
  std::int64_t n = 0;
  double phi_tilde = 0;
  double alpha_tilde = 0;
  /// tau-check: the p-branch form (equal to tau_strong when p >= 2).
  double tau_check = 0;
  /// || (int |P(Y_n <= t | F_0) - F(t)|^p mu(dt))^{1/p} ||_2 for every p.
  double tau_strong = 0;
  double lemma63_phi_slack = 0;
  double lemma63_alpha_slack = 0;
  double lemma64_phi_slack = 0;    ///< NaN when p > 2
  double lemma64_alpha_slack = 0;  ///< NaN when p > 2
};

struct CoefficientTable {
  double p = 1.0;
  std::vector<CoefficientRow> rows;

  /// Smallest bound slack over lags n >= 1 (NaN entries skipped).
  double min_slack() const;
  Table to_table() const;
};

/// phi-tilde and alpha-tilde (sup over the distinct observation values,
/// which is exact), tau-check on the mu-grid, for n = 0..n_max. A uniform
/// driver yields zero rows for n = 1..n_max.
CoefficientTable mixing_coefficients(const EmpiricalSetup& setup, std::int64_t n_max);

/// tau-check for a single lag.
double tau_check(const EmpiricalSetup& setup, std::int64_t n);

/// Fills the slacks (bound minus coefficient) of the finite-measure bounds
///   tau_strong <= mu(R)^{1/p} phi,  tau_strong <= mu(R)^{1/p} alpha^{1/q}, q = max(2, p),
/// and, for p <= 2,
///   tau_check <= sqrt(2) (int (F(1-F))^{p/2} dmu)^{1/p} phi^{1/2},
///   tau_check <= sqrt(2) (int min(alpha, F(1-F))^{p/2} dmu)^{1/p},
/// with the integrals over the whole grid. Rejects infinite-measure grids.
void bound_checks(CoefficientTable& table, const EmpiricalSetup& setup);

enum class TheomixBranch { phi, quantile };

/// Q(x) = inf{t >= 0 : P(|Y| > t) <= x}.
double quantile_function(const EmpiricalSetup& setup, double x);

/// int_0^a x^{p/2 - 1} Q(x) dx in closed form (Q is a step function for a
/// finite-support |Y|, and 1 - x for the uniform driver).
double quantile_integral(const EmpiricalSetup& setup, double a);

/// Partial sums of n^{-1/2} phi(n)^{1/2} (branch i) or
/// n^{-1/2} (int_0^{alpha(n)} x^{p/2-1} Q(x) dx)^{1/p} (branch ii), n = 1..n_max.
/// Branch ii needs a Lebesgue (trapezoidal) grid.
SeriesTrace<double> theomix_series(const EmpiricalSetup& setup, TheomixBranch branch, std::int64_t n_max);

struct EmpiricalOptions {
  unsigned threads = default_threads();
  /// Dual test functions f on the grid (rows); empty means the constant 1.
  Matrix<double> dual;
  /// Length of the single path for the LIL trajectory; 0 skips it.
  std::int64_t lil_horizon = 0;
  std::int64_t lil_burn_in = 1000;
  /// Reference mean of sqrt(n) D_{n,p} to compare against, if any.
  std::optional<double> reference_mean;
  double reference_tolerance = 0.05;
};

/// sqrt(n) D_{n,p}(mu) over M paths; Gamma(f) estimates against the exact
/// sigma of the projected functional; optional LIL trajectory of
/// sqrt(n) D_{n,p} / sqrt(2 L(L(n))).
ExperimentResult empirical_limit_experiment(const EmpiricalSetup& setup, std::int64_t n, std::uint64_t M,
                                            std::uint64_t seed, const EmpiricalOptions& opt = {});

/// Exact sigma of the real functional int f(s) X_0(s) mu(ds).
double exact_gamma(const EmpiricalSetup& setup, const RowVector<double>& f);

}  // namespace mwlab
