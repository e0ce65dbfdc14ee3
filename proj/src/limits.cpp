#include "mwlab/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace mwlab {

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

double normal_cdf(double x, double sigma) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); }

double ks_normal(std::vector<double> sample, double sigma) {
  if (sample.empty()) throw InvalidArgument("ks_normal: empty sample");
  if (!(sigma > 0)) throw InvalidArgument("ks_normal: sigma must be positive");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = normal_cdf(sample[i], sigma);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Matrix<double> correlation(const Matrix<double>& samples) {
  const Matrix<double> centered = samples.rowwise() - samples.colwise().mean();
  Matrix<double> cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  const Vector<double> sd = cov.diagonal().cwiseSqrt();
  for (Index i = 0; i < cov.rows(); ++i)
    for (Index j = 0; j < cov.cols(); ++j) cov(i, j) = sd[i] > 0 && sd[j] > 0 ? cov(i, j) / (sd[i] * sd[j]) : 0.0;
  return cov;
}

std::vector<std::int64_t> geometric_checkpoints(std::int64_t first, std::int64_t horizon, int per_decade) {
  if (first < 1 || per_decade < 1) throw InvalidArgument("checkpoints: need first >= 1 and per_decade >= 1");
  std::vector<std::int64_t> out;
  for (int j = 0;; ++j) {
    const auto n = static_cast<std::int64_t>(std::llround(static_cast<double>(first) * std::pow(10.0, double(j) / per_decade)));
    if (n >= horizon) break;
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

// ---------------------------------------------------------------------------
// Dual directions
// ---------------------------------------------------------------------------

namespace {

double dual_norm(const Field& f, const RowVector<double>& u) {
  if (!f.is_grid()) return std::abs(u(0));
  if (f.p == 1.0) return u.cwiseAbs().maxCoeff();
  const double q = f.p / (f.p - 1.0);
  return std::pow((f.grid.weights.transpose().array() * u.array().abs().pow(q)).sum(), 1.0 / q);
}

RowVector<double> functional_weights(const Field& f, const RowVector<double>& u) {
  if (!f.is_grid()) return u;
  return f.grid.weights.transpose().cwiseProduct(u);
}

double sigma_scale(const Model& model, const Field& f) {
  return std::max(1.0, (model.stationary().transpose() * f.values.array().square().matrix()).maxCoeff());
}

}  // namespace

Matrix<double> dual_net(const Field& f, int blocks) {
  if (!f.is_grid()) return Matrix<double>::Ones(1, 1);
  if (blocks < 1) throw InvalidArgument("dual_net: blocks must be >= 1");
  const Index g = f.dims();
  std::vector<RowVector<double>> rows;
  rows.push_back(RowVector<double>::Ones(g));
  const Index b = std::min<Index>(blocks, g);
  for (Index k = 0; k < b && b > 1; ++k) {
    RowVector<double> u = RowVector<double>::Zero(g);
    u.segment(k * g / b, (k + 1) * g / b - k * g / b).setOnes();
    rows.push_back(u);
  }
  if (g > 1) {
    RowVector<double> u = RowVector<double>::Ones(g);
    u.tail(g - g / 2).setConstant(-1.0);
    rows.push_back(u);
  }
  Matrix<double> net(static_cast<Index>(rows.size()), g);
  for (std::size_t r = 0; r < rows.size(); ++r) net.row(static_cast<Index>(r)) = rows[r] / dual_norm(f, rows[r]);
  return net;
}

Field project(const Field& f, const RowVector<double>& u) {
  const RowVector<double> a = functional_weights(f, u);
  Field g = Field::scalar(f.values * a.transpose());
  g.centered = f.centered;
  return g;
}

std::vector<double> directional_sigmas(const Model& model, const MartingaleDifference<double>& d,
                                       const Matrix<double>& net) {
  const auto cov = asymptotic_covariance(model, d);
  std::vector<double> out;
  for (Index r = 0; r < net.rows(); ++r) {
    const RowVector<double> a = functional_weights(d.h, net.row(r));
    out.push_back(std::sqrt(std::max(0.0, (a * cov.K * a.transpose())(0, 0))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CLT
// ---------------------------------------------------------------------------

ExperimentResult clt_experiment(const Model& model, const Field& f, std::int64_t n, std::uint64_t M,
                                std::uint64_t seed, const LimitOptions& opt, double ks_threshold) {
  require_centered(model, f, "clt_experiment");
  if (n < 1 || M < 2) throw InvalidArgument("clt_experiment: need n >= 1 and M >= 2");
  const auto d = martingale_difference(model, f);
  const Matrix<double> net = dual_net(f, opt.net_blocks);
  const auto sig = directional_sigmas(model, d, net);
  const double top = *std::max_element(sig.begin(), sig.end());
  if (top * top <= 1e-14 * sigma_scale(model, f)) {
    throw DegenerateLimit("clt_experiment: asymptotic variance is zero (coboundary input?); no Gaussian limit to test");
  }

  struct Sums {
    RowVector<double> f, d;
  };
  const auto sums = parallel_map<Sums>(M, opt.threads, [&](std::uint64_t stream) {
    PathStream<double> walker(model, -1, seed, stream);
    Sums s{RowVector<double>::Zero(f.dims()), RowVector<double>::Zero(f.dims())};
    for (std::int64_t t = 0; t < n; ++t) {
      const Index prev = walker.state();
      walker.advance();
      const Index w = walker.state();
      s.f += f.values.row(w);
      s.d += d.h.values.row(w) - d.Ph.row(prev);
    }
    return s;
  });

  ExperimentResult r;
  r.name = "clt";
  r.seed = seed;
  r.stream_end = M;
  const double root = std::sqrt(static_cast<double>(n));
  Table dirs{"ks_directions", {"direction", "sigma", "ks_statistic", "ks_f_vs_d", "variance_ratio"}, {}};
  Matrix<double> projections(static_cast<Index>(M), net.rows());
  double ks_max = 0, ks_fd_max = 0;
  for (Index k = 0; k < net.rows(); ++k) {
    const RowVector<double> a = functional_weights(f, net.row(k));
    std::vector<double> pf(M), pd(M);
    for (std::uint64_t j = 0; j < M; ++j) {
      pf[j] = sums[j].f.dot(a) / root;
      pd[j] = sums[j].d.dot(a) / root;
      projections(static_cast<Index>(j), k) = pf[j];
    }
    const double mean = std::accumulate(pf.begin(), pf.end(), 0.0) / double(M);
    double var = 0;
    for (double x : pf) var += (x - mean) * (x - mean);
    var /= double(M - 1);
    const double s = sig[static_cast<std::size_t>(k)];
    const double ks = s > 0 ? ks_normal(pf, s) : 0.0;
    const double ks_fd = ks_two_sample(pf, pd);
    ks_max = std::max(ks_max, ks);
    ks_fd_max = std::max(ks_fd_max, ks_fd);
    dirs.add({double(k), s, ks, ks_fd, s > 0 ? var / (s * s) : 0.0});
    if (k == 0) {
      r.scalars["sample_mean"] = mean;
      r.scalars["sample_variance"] = var;
    }
  }
  r.tables.push_back(std::move(dirs));
  r.scalars["ks_statistic"] = ks_max;
  r.scalars["ks_f_vs_d"] = ks_fd_max;
  r.scalars["ks_critical_95"] = 1.3581 / std::sqrt(double(M));
  r.scalars["n"] = double(n);
  r.scalars["paths"] = double(M);
  r.scalars["net_size"] = double(net.rows());
  if (!f.is_grid()) {
    r.scalars["sigma2"] = d.sigma2[0];
    r.scalars["approximation_error_over_sqrt_n"] = approximation_error(model, d, static_cast<std::uint64_t>(n)) / root;
  } else {
    r.scalars["sigma2"] = top * top;
    // Exact covariance of the projections against the empirical one.
    const auto cov = asymptotic_covariance(model, d);
    Matrix<double> A(net.rows(), f.dims());
    for (Index k = 0; k < net.rows(); ++k) A.row(k) = functional_weights(f, net.row(k));
    const Matrix<double> exact = A * cov.K * A.transpose();
    const Matrix<double> centered = projections.rowwise() - projections.colwise().mean();
    const Matrix<double> empirical = centered.transpose() * centered / double(M - 1);
    r.scalars["covariance_max_error"] = (empirical - exact).cwiseAbs().maxCoeff() / exact.diagonal().maxCoeff();
  }
  r.add_verdict("ks_below_threshold", ks_max < ks_threshold, ks_max, ks_threshold, 0.0,
                "KS against Normal(0, exact K) over the dual net");
  r.notes.push_back("sigma from the Poisson-equation martingale; paths start at -1 so the d-version uses W_{-1}");
  return r;
}

// ---------------------------------------------------------------------------
// Finite-dimensional distributions
// ---------------------------------------------------------------------------

ExperimentResult fdd_experiment(const Model& model, const Field& f, const std::vector<double>& times_in,
                                std::int64_t n, std::uint64_t M, std::uint64_t seed, const LimitOptions& opt) {
  require_centered(model, f, "fdd_experiment");
  if (n < 1 || M < 3) throw InvalidArgument("fdd_experiment: need n >= 1 and M >= 3");
  std::vector<double> times = times_in;
  if (times.empty()) throw InvalidArgument("fdd_experiment: times must be non-empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0 || times[i] > 1) throw InvalidArgument("fdd_experiment: times must lie in [0, 1]");
    if (i > 0 && !(times[i] > times[i - 1])) throw InvalidArgument("fdd_experiment: times must be strictly increasing");
  }
  if (times.front() > 0) times.insert(times.begin(), 0.0);
  if (times.size() < 2) throw InvalidArgument("fdd_experiment: need at least one increment");

  const Field g = project(f, dual_net(f, opt.net_blocks).row(0));
  const auto d = martingale_difference(model, g);
  const double sigma2 = d.sigma2[0];
  if (sigma2 <= 1e-14 * sigma_scale(model, g)) throw DegenerateLimit("fdd_experiment: asymptotic variance is zero");

  const std::size_t k = times.size();
  std::vector<std::int64_t> idx(k);
  std::vector<double> frac(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double nt = double(n) * times[i];
    idx[i] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(nt)), n);
    frac[i] = nt - double(idx[i]);
  }
  const double root = std::sqrt(double(n));
  const auto values = parallel_map<std::vector<double>>(M, opt.threads, [&](std::uint64_t stream) {
    std::vector<double> T(k, 0.0);
    PathStream<double> walker(model, 0, seed, stream);
    double S = 0;
    std::size_t next = 0;
    for (std::int64_t t = 0; t < n; ++t) {
      const double x = g.values(walker.state(), 0);
      while (next < k && idx[next] == t) {
        T[next] = (S + frac[next] * x) / root;
        ++next;
      }
      S += x;
      if (t + 1 < n) walker.advance();
    }
    for (; next < k; ++next) T[next] = S / root;
    return T;
  });

  const Index inc = static_cast<Index>(k - 1);
  Matrix<double> increments(static_cast<Index>(M), inc);
  for (std::uint64_t j = 0; j < M; ++j)
    for (Index i = 0; i < inc; ++i)
      increments(static_cast<Index>(j), i) = values[j][static_cast<std::size_t>(i) + 1] - values[j][static_cast<std::size_t>(i)];

  ExperimentResult r;
  r.name = "fdd";
  r.seed = seed;
  r.stream_end = M;
  Table table{"increments", {"index", "t_start", "t_end", "variance", "expected_variance", "ratio", "ks_statistic"}, {}};
  const double var_band = 3 * std::sqrt(2.0 / double(M - 1));
  double worst_ratio = 0, ks_max = 0;
  for (Index i = 0; i < inc; ++i) {
    const Vector<double> col = increments.col(i);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / double(M - 1);
    const double len = times[static_cast<std::size_t>(i) + 1] - times[static_cast<std::size_t>(i)];
    const double expected = len * sigma2;
    const double ks = ks_normal(std::vector<double>(col.data(), col.data() + col.size()), std::sqrt(expected));
    worst_ratio = std::max(worst_ratio, std::abs(var / expected - 1));
    ks_max = std::max(ks_max, ks);
    table.add({double(i), times[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(i) + 1], var, expected,
               var / expected, ks});
  }
  r.tables.push_back(std::move(table));
  const Matrix<double> corr = correlation(increments);
  Table ct{"increment_correlation", {"i", "j", "correlation"}, {}};
  double max_corr = 0;
  for (Index i = 0; i < inc; ++i)
    for (Index j = i + 1; j < inc; ++j) {
      ct.add({double(i), double(j), corr(i, j)});
      max_corr = std::max(max_corr, std::abs(corr(i, j)));
    }
  r.tables.push_back(std::move(ct));
  const double corr_band = 3 / std::sqrt(double(M));
  r.scalars["sigma2"] = sigma2;
  r.scalars["ks_statistic"] = ks_max;
  r.scalars["max_abs_correlation"] = max_corr;
  r.scalars["max_variance_deviation"] = worst_ratio;
  r.scalars["n"] = double(n);
  r.scalars["paths"] = double(M);
  r.add_verdict("increments_uncorrelated", max_corr < corr_band, max_corr, corr_band, 0.0, "|rho| < 3/sqrt(M)");
  r.add_verdict("variance_proportional", worst_ratio <= 0.05 + var_band, worst_ratio, 0.05, var_band,
                "|Var(increment) / ((t_i - t_{i-1}) sigma^2) - 1|");
  if (f.is_grid()) r.notes.push_back("grid observable projected on the constant dual direction");
  return r;
}

// ---------------------------------------------------------------------------
// LIL
// ---------------------------------------------------------------------------

ExperimentResult lil_experiment(const Model& model, const Field& f, std::int64_t horizon, std::uint64_t seed,
                                const LilOptions& lil, const LimitOptions& opt) {
  require_centered(model, f, "lil_experiment");
  if (horizon < 1 || lil.burn_in < 1 || lil.burn_in > horizon) {
    throw InvalidArgument("lil_experiment: need 1 <= burn_in <= horizon");
  }
  const auto d = martingale_difference(model, f);
  const auto sig = directional_sigmas(model, d, dual_net(f, opt.net_blocks));
  const double target = *std::max_element(sig.begin(), sig.end());
  int depth = 0;
  while ((std::int64_t{1} << (depth + 1)) <= horizon) ++depth;
  const auto mw2 = mw2_norm(model, f, depth);
  const auto bound_at = [&](std::int64_t n) {
    int k = 0;
    while ((std::int64_t{1} << (k + 1)) <= n) ++k;
    k = std::min<int>(k, static_cast<int>(mw2.partials.size()) - 1);
    return 10 * std::sqrt(2.0) * mw2.partials[static_cast<std::size_t>(k)];
  };

  const auto checkpoints = geometric_checkpoints(lil.burn_in, horizon, lil.checkpoints_per_decade);
  Table traj{"trajectory", {"n", "ratio", "ratio_nlln", "bound", "current_ratio"}, {}};
  PathStream<double> walker(model, 0, seed, 0);
  RowVector<double> S = RowVector<double>::Zero(f.dims());
  double run2 = 0, run1 = 0, m2_all = 0;
  std::size_t next = 0;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    S += f.values.row(walker.state());
    const double norm = f.point_norm(S);
    const double nn = double(n);
    m2_all = std::max(m2_all, norm / lil_normalizer(nn));
    if (n >= lil.burn_in) {
      run2 = std::max(run2, norm / lil_normalizer2(nn));
      run1 = std::max(run1, norm / lil_normalizer(nn));
    }
    if (next < checkpoints.size() && checkpoints[next] == n) {
      traj.add({nn, run2, run1, bound_at(n), norm / lil_normalizer2(nn)});
      ++next;
    }
    if (n < horizon) walker.advance();
  }

  ExperimentResult r;
  r.name = "lil";
  r.seed = seed;
  r.stream_end = 1;
  double worst_bound = 0;
  for (const auto& row : traj.rows) {
    if (row[3] > 0) worst_bound = std::max(worst_bound, row[1] / row[3]);
    else if (row[1] > 0) worst_bound = std::numeric_limits<double>::infinity();
  }
  r.scalars["target_sigma"] = target;
  r.scalars["final_running_max"] = run2;
  r.scalars["final_running_max_nlln"] = run1;
  r.scalars["final_ratio_to_sigma"] = target > 0 ? run2 / target : 0.0;
  r.scalars["maximal_function_m2"] = m2_all;
  r.scalars["mw2_partial"] = mw2.sum();
  r.scalars["max_ratio_to_bound"] = worst_bound;
  r.scalars["horizon"] = double(horizon);
  r.scalars["burn_in"] = double(lil.burn_in);
  r.tables.push_back(std::move(traj));

  if (target > 0) {
    const double ratio = run2 / target;
    auto& v = r.add_verdict("lil_band", ratio >= lil.band_low && ratio <= lil.band_high, ratio, lil.band_high, 0.0,
                            "final running max / sigma must lie in [" + std::to_string(lil.band_low) + ", " +
                                std::to_string(lil.band_high) + "]");
    if (horizon < 100000) v.informational = true;
  }
  r.add_verdict("mw2_bound", worst_bound <= 1.0, worst_bound, 1.0, 0.0,
                "running max <= 10 sqrt(2) x MW2 partial sum at every checkpoint");
  if (horizon < 100000) {
    r.notes.push_back("warning: horizon below 1e5; the log-log normalizer converges too slowly for the band to mean much");
  }
  r.notes.push_back("primary normalizer sqrt(2 n L(L(n))); ratio_nlln uses sqrt(n L(L(n)))");
  if (f.is_grid()) r.notes.push_back("target is the maximum of sigma_u over a finite dual net (a lower bound for the sup)");
  return r;
}

// ---------------------------------------------------------------------------
// Counterexample
// ---------------------------------------------------------------------------

WeightRule parse_weight_rule(const std::string& name) {
  if (name == "one") return WeightRule::one;
  if (name == "inv_log") return WeightRule::inv_log;
  if (name == "inv_loglog") return WeightRule::inv_loglog;
  if (name == "inv_sqrt_log") return WeightRule::inv_sqrt_log;
  throw InvalidArgument("unknown weight rule '" + name + "' (one, inv_log, inv_loglog, inv_sqrt_log)");
}

std::string to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::one: return "one";
    case WeightRule::inv_log: return "inv_log";
    case WeightRule::inv_loglog: return "inv_loglog";
    case WeightRule::inv_sqrt_log: return "inv_sqrt_log";
  }
  return "one";
}

double weight(WeightRule rule, std::int64_t n) {
  const double x = double(n);
  switch (rule) {
    case WeightRule::one: return 1.0;
    case WeightRule::inv_log: return 1.0 / log_floor1(x);
    case WeightRule::inv_loglog: return 1.0 / log_floor1(log_floor1(x));
    case WeightRule::inv_sqrt_log: return 1.0 / std::sqrt(log_floor1(x));
  }
  return 1.0;
}

namespace {

Field renewal_observable(const RenewalChain& chain) {
  Vector<double> v = Vector<double>::Zero(chain.model.size());
  v[0] = 1.0;
  return center_observable(chain.model, Field::scalar(v));
}

/// Partial sums of sum_n a_n ||g_n||_2 / n^{3/2}, recorded at `marks`.
std::vector<double> weighted_series(const RenewalChain& chain, WeightRule rule, std::int64_t terms,
                                    const std::vector<std::int64_t>& marks, std::vector<double>* term_out = nullptr) {
  const Field f = renewal_observable(chain);
  const auto& pi = chain.model.stationary();
  Vector<double> v = f.values.col(0);
  Vector<double> g = v;
  double partial = 0;
  std::vector<double> out;
  std::size_t next = 0;
  for (std::int64_t n = 1; n <= terms; ++n) {
    const double term = weight(rule, n) * std::sqrt(pi.dot(g.cwiseAbs2())) / std::pow(double(n), 1.5);
    partial += term;
    if (next < marks.size() && marks[next] == n) {
      out.push_back(partial);
      if (term_out) term_out->push_back(term);
      ++next;
    }
    v = chain.model.transition() * v;
    g += v;
  }
  return out;
}

}  // namespace

ExperimentResult counterexample_experiment(const RenewalSpec& spec, std::uint64_t seed,
                                           const CounterexampleOptions& ce, const LimitOptions& opt) {
  if (spec.tail_exponent > 3.0) {
    throw InvalidArgument("counterexample: tail_exponent " + std::to_string(spec.tail_exponent) +
                          " > 3 gives E tau^2 < infinity, which defeats the purpose");
  }
  if (ce.series_terms < 1 || ce.horizon < 1 || ce.seeds < 1) throw InvalidArgument("counterexample: bad sizes");
  const auto chain = build_renewal_chain(spec);
  const Field f = renewal_observable(chain);

  ExperimentResult r;
  r.name = "counterexample";
  r.seed = seed;
  r.stream_end = ce.seeds;
  r.scalars["tail_exponent"] = spec.tail_exponent;
  r.scalars["truncation"] = double(spec.truncation);
  r.scalars["mean_return"] = chain.mean_return;
  r.scalars["second_moment_return"] = chain.second_moment_return;
  r.scalars["tail_mass_lumped"] = chain.tail_mass_dropped;

  // (a) weighted series and truncation sensitivity.
  const auto marks = geometric_checkpoints(1, ce.series_terms, 1);
  std::vector<double> terms;
  const auto partials = weighted_series(chain, ce.rule, ce.series_terms, marks, &terms);
  Table series{"weighted_series", {"n", "a_n", "term", "partial_sum"}, {}};
  for (std::size_t i = 0; i < marks.size(); ++i) series.add({double(marks[i]), weight(ce.rule, marks[i]), terms[i], partials[i]});
  r.tables.push_back(std::move(series));
  std::set<Index> truncs(ce.sensitivity_truncations.begin(), ce.sensitivity_truncations.end());
  truncs.insert(spec.truncation);
  Table sens{"series_sensitivity", {"truncation", "partial_sum"}, {}};
  double lo = 1e300, hi = 0;
  for (Index N : truncs) {
    const double value = N == spec.truncation
                             ? partials.back()
                             : weighted_series(build_renewal_chain({spec.tail_exponent, N}), ce.rule, ce.series_terms,
                                               {ce.series_terms})
                                   .back();
    sens.add({double(N), value});
    lo = std::min(lo, value);
    hi = std::max(hi, value);
  }
  r.tables.push_back(std::move(sens));
  r.scalars["weighted_series_partial"] = partials.back();
  r.scalars["weighted_series_relative_spread"] = (hi - lo) / hi;

  // (b) exact Var(S_n)/n.
  std::vector<std::int64_t> ns = ce.variance_ns;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const auto growth = variance_growth(chain.model, f, ns);
  Table var{"variance_growth", {"n", "var_over_n"}, {}};
  bool increasing = true;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    var.add({double(ns[i]), growth[i]});
    if (i > 0 && !(growth[i] > growth[i - 1])) increasing = false;
  }
  r.tables.push_back(std::move(var));
  r.add_verdict("variance_strictly_increasing", increasing, growth.empty() ? 0.0 : growth.back(), 0.0, 0.0,
                "exact Var(S_n)/n on the truncated chain");

  // (c) E tau^2 partial sums over dyadic truncations of the untruncated law.
  Table moment{"second_moment_partials", {"N", "partial", "increment", "c_log2"}, {}};
  const double c = chain.normalizer;
  double acc = 0, prev = 0, min_inc = 1e300;
  Index mark = 2;
  for (Index i = 1; i <= spec.truncation; ++i) {
    acc += c * std::pow(double(i), 2.0 - spec.tail_exponent);
    if (i == mark) {
      moment.add({double(i), acc, acc - prev, c * std::log(2.0)});
      if (i >= 32) min_inc = std::min(min_inc, acc - prev);
      prev = acc;
      mark *= 2;
    }
  }
  r.tables.push_back(std::move(moment));
  r.add_verdict("second_moment_diverges", min_inc < 1e300 && min_inc >= 0.9 * c * std::log(2.0), min_inc, 0.9 * c * std::log(2.0), 0.0,
                "increment of sum_{i<=N} i^2 p_i per doubling of N >= 32 stays >= 0.9 c log 2");

  // (d) empirical normalized maxima.
  const auto checkpoints = geometric_checkpoints(100, ce.horizon, ce.checkpoints_per_decade);
  struct Traj {
    std::vector<double> stat, abs_sn;
  };
  const auto trajs = parallel_map<Traj>(ce.seeds, opt.threads, [&](std::uint64_t stream) {
    Traj t;
    PathStream<double> walker(chain.model, 0, seed, stream);
    double S = 0, run = 0;
    std::size_t next = 0;
    for (std::int64_t n = 1; n <= ce.horizon; ++n) {
      S += f.values(walker.state(), 0);
      run = std::max(run, std::abs(S));
      if (next < checkpoints.size() && checkpoints[next] == n) {
        t.stat.push_back(run / lil_normalizer(double(n)));
        t.abs_sn.push_back(std::abs(S) / std::sqrt(double(n)));
        ++next;
      }
      if (n < ce.horizon) walker.advance();
    }
    return t;
  });
  Table emp{"empirical_trajectory", {"stream", "n", "max_over_lil", "abs_sn_over_sqrt_n"}, {}};
  for (std::uint64_t s = 0; s < ce.seeds; ++s)
    for (std::size_t i = 0; i < checkpoints.size(); ++i) emp.add({double(s), double(checkpoints[i]), trajs[s].stat[i], trajs[s].abs_sn[i]});
  r.tables.push_back(std::move(emp));
  Table quant{"abs_sn_quantiles", {"n", "median", "q90"}, {}};
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    std::vector<double> xs;
    for (const auto& t : trajs) xs.push_back(t.abs_sn[i]);
    std::sort(xs.begin(), xs.end());
    const auto q = [&](double p) { return xs[std::min(xs.size() - 1, static_cast<std::size_t>(p * double(xs.size())))]; };
    quant.add({double(checkpoints[i]), q(0.5), q(0.9)});
  }
  r.tables.push_back(std::move(quant));
  const auto from = std::find_if(checkpoints.begin(), checkpoints.end(), [&](std::int64_t n) { return n >= ce.empirical_from; });
  std::uint64_t increases = 0;
  if (from != checkpoints.end()) {
    const auto i0 = static_cast<std::size_t>(from - checkpoints.begin());
    for (const auto& t : trajs) increases += t.stat.back() > t.stat[i0];
  }
  r.scalars["empirical_increases"] = double(increases);
  r.scalars["empirical_from"] = double(ce.empirical_from);
  r.scalars["horizon"] = double(ce.horizon);
  r.add_verdict("empirical_growth", increases >= ce.required_increases, double(increases), double(ce.required_increases),
                0.0, "seeds whose max_{k<=n}|S_k|/sqrt(n L(L(n))) grows from empirical_from to horizon");
  r.notes.push_back("X = 1{W_0 = 0} - pi_0 on the truncated chain; tail mass beyond the truncation is lumped on tau = N");
  r.notes.push_back("weight rule a_n = " + to_string(ce.rule));
  r.notes.push_back("on any truncated chain E tau^2 < infinity, so growth is a finite-size diagnostic, not a proof");
  return r;
}

// ---------------------------------------------------------------------------
// CLIL diagnostic
// ---------------------------------------------------------------------------

ExperimentResult clil_diagnostic(const Model& model, const Field& f, std::int64_t horizon, std::uint64_t seed,
                                 const LimitOptions& opt, int checkpoints_per_decade) {
  if (!f.is_grid()) throw InvalidArgument("clil_diagnostic: needs a grid observable");
  require_centered(model, f, "clil_diagnostic");
  const auto d = martingale_difference(model, f);
  const auto sig = directional_sigmas(model, d, dual_net(f, opt.net_blocks));
  const double radius = *std::max_element(sig.begin(), sig.end());
  const double point_sigma = std::sqrt(std::max(0.0, asymptotic_covariance(model, d).K.diagonal().maxCoeff()));
  const double norm_bound = f.point_norm(RowVector<double>::Ones(f.dims()));

  const auto checkpoints = geometric_checkpoints(std::min<std::int64_t>(100, horizon), horizon, checkpoints_per_decade);
  std::vector<RowVector<double>> points;
  PathStream<double> walker(model, 0, seed, 0);
  RowVector<double> S = RowVector<double>::Zero(f.dims());
  std::size_t next = 0;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    S += f.values.row(walker.state());
    if (next < checkpoints.size() && checkpoints[next] == n) {
      points.push_back(S / lil_normalizer2(double(n)));
      ++next;
    }
    if (n < horizon) walker.advance();
  }
  const std::size_t tail = std::max<std::size_t>(1, (points.size() + 3) / 4);
  double diameter = 0, max_norm = 0;
  Table traj{"trajectory", {"n", "norm", "distance_to_ball"}, {}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double nm = f.point_norm(points[i]);
    traj.add({double(checkpoints[i]), nm, std::max(0.0, nm - radius)});
    if (i + tail >= points.size()) {
      max_norm = std::max(max_norm, nm);
      for (std::size_t j = points.size() - tail; j < i; ++j) diameter = std::max(diameter, f.point_norm(points[i] - points[j]));
    }
  }
  ExperimentResult r;
  r.name = "clil";
  r.seed = seed;
  r.stream_end = 1;
  r.tables.push_back(std::move(traj));
  r.scalars["ball_radius"] = radius;
  r.scalars["max_point_sigma"] = point_sigma;
  r.scalars["grid_norm_bound"] = norm_bound;
  r.scalars["trailing_diameter"] = diameter;
  r.scalars["trailing_max_norm"] = max_norm;
  r.scalars["trailing_distance_to_ball"] = std::max(0.0, max_norm - radius);
  const double cap = 1.2 * point_sigma * norm_bound;
  auto& v = r.add_verdict("trailing_within_pointwise_ball", max_norm <= cap, max_norm, cap, 0.0,
                          "trailing normalized sums within 1.2 (max point sigma) (grid norm of 1)");
  v.informational = true;
  r.notes.push_back("compactness proxy only; the dual net gives a lower bound for the limit-ball radius");
  return r;
}

}  // namespace mwlab
