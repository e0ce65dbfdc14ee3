// Dyadic maximal decomposition, maximal functions and maximal-inequality checks.
//
// With e_k = P^{2^k} g_{2^k} the conditional expectation E_{-2^k}(S_{2^k}) o theta^t
// is e_k(W_{t-2^k}) (Markov property), so along a path
//   u_k o theta^t = |e_k(W_{t-2^k})|
//   d_k o theta^t = e_k(W_{t-2^k}) + e_k(W_t) - e_{k+1}(W_{t-2^{k+1}}).
// Pairing consecutive conditional terms level by level gives, for i <= 2^d,
//   S_i = A_i + sum_k [ D_k(i_{k+1}) + b_k e_k(W_{2^{k+1} i_{k+1} - 2^k}) ] + i_d e_d(W_{-2^d}),
// where i_0 = i, i_{k+1} = floor(i_k / 2), b_k = i_k mod 2, A_i sums the
// adapted part and D_k(j) the first j terms of the lag-2^{k+1} d_k series.
#pragma once

#include "mwlab/martingale.hpp"
#include "mwlab/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

namespace mwlab {

/// S_1..S_N along a path (row n-1 holds S_n), with S_0 = 0 implicit.
template <typename Scalar = double>
struct PartialSums {
  Matrix<Scalar> sums;
  Observable<Scalar> geometry;

  Index count() const { return sums.rows(); }

  /// |S_n|_X for n = 1..N.
  std::vector<Scalar> norms() const {
    std::vector<Scalar> out(static_cast<std::size_t>(sums.rows()));
    for (Index n = 0; n < sums.rows(); ++n) out[static_cast<std::size_t>(n)] = geometry.point_norm(sums.row(n));
    return out;
  }

  RowVector<Scalar> at(Index n) const {
    if (n == 0) return RowVector<Scalar>::Zero(sums.cols());
    return sums.row(n - 1);
  }

  /// Polygonal S_{n,t} = S_[nt] + (nt - [nt]) X_[nt] for n = count().
  RowVector<Scalar> polygonal(Scalar t) const {
    const Scalar nt = Scalar(count()) * t;
    const auto whole = static_cast<Index>(std::floor(nt));
    const Scalar frac = nt - Scalar(whole);
    if (whole >= count() || frac == Scalar(0)) return at(std::min(whole, count()));
    return at(whole) + frac * (at(whole + 1) - at(whole));
  }
};

/// S_1..S_n of f along the path (times 0..n-1).
template <typename Scalar>
PartialSums<Scalar> partial_sums(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, const Path& path,
                                 Index n) {
  if (path.start > 0 || path.horizon < n) throw InvalidArgument("partial_sums: path does not cover times 0..n-1");
  PartialSums<Scalar> out;
  out.geometry = f;
  out.sums.resize(n, f.dims());
  RowVector<Scalar> acc = RowVector<Scalar>::Zero(f.dims());
  for_each_state(model, path, [&](std::int64_t t, Index w) {
    if (t < 0 || t >= n) return;
    acc += f.values.row(w);
    out.sums.row(t) = acc;
  });
  return out;
}

template <typename Scalar = double>
struct DyadicComponents {
  int depth = 0;
  Observable<Scalar> geometry;
  /// Row l: (X - E_{-1} X) o theta^l = f(W_l) - (Pf)(W_{l-1}), l < 2^d.
  Matrix<Scalar> adapted;
  /// martingale[k] row l: d_k o theta^{2^{k+1} l}, l < 2^{d-k-1}.
  std::vector<Matrix<Scalar>> martingale;
  /// lagged[k] row l: E_{-2^k}(S_{2^k}) o theta^{2^{k+1} l} = e_k(W_{2^{k+1} l - 2^k}).
  std::vector<Matrix<Scalar>> lagged;
  /// E_{-2^d}(S_{2^d}) = e_d(W_{-2^d}).
  RowVector<Scalar> top;

  /// u_k o theta^{2^{k+1} l} for l < 2^{d-1-k}.
  std::vector<Scalar> u(int k) const {
    const auto& rows = lagged[static_cast<std::size_t>(k)];
    std::vector<Scalar> out(static_cast<std::size_t>(rows.rows()));
    for (Index l = 0; l < rows.rows(); ++l) out[static_cast<std::size_t>(l)] = geometry.point_norm(rows.row(l));
    return out;
  }

  Scalar u_top() const { return geometry.point_norm(top); }

  /// S_i rebuilt from the components by the pairing identity.
  RowVector<Scalar> reconstruct(std::int64_t i) const {
    RowVector<Scalar> s = adapted.topRows(i).colwise().sum();
    std::int64_t ik = i;
    for (int k = 0; k < depth; ++k) {
      const std::int64_t next = ik / 2;
      const auto& mk = martingale[static_cast<std::size_t>(k)];
      if (next > 0) s += mk.topRows(next).colwise().sum();
      if (ik % 2 == 1) s += lagged[static_cast<std::size_t>(k)].row(next);
      ik = next;
    }
    if (ik == 1) s += top;
    return s;
  }
};

/// e_k = P^{2^k} g_{2^k} for k = 0..depth (the state functions behind
/// E_{-2^k}(S_{2^k})).
template <typename Scalar>
std::vector<Matrix<Scalar>> lagged_conditional_profiles(const MarkovModel<Scalar>& model, const Observable<Scalar>& f,
                                                        int depth) {
  DyadicPowers<Scalar> powers(model);
  const auto g = dyadic_sum_profiles(model, f, depth, powers);
  std::vector<Matrix<Scalar>> e;
  e.reserve(g.size());
  for (int k = 0; k <= depth; ++k) {
    e.push_back(powers.dense() ? Matrix<Scalar>(powers.power(k) * g[static_cast<std::size_t>(k)])
                               : powers.apply(std::uint64_t{1} << k, g[static_cast<std::size_t>(k)]));
  }
  return e;
}

template <typename Scalar>
DyadicComponents<Scalar> dyadic_components(const MarkovModel<Scalar>& model, const Observable<Scalar>& f,
                                           const Path& path, int d,
                                           const std::vector<Matrix<Scalar>>* profiles = nullptr) {
  require_centered(model, f, "dyadic_components");
  if (d < 0 || d > 40) throw InvalidArgument("dyadic_components: depth must lie in [0, 40]");
  const std::int64_t span = std::int64_t{1} << d;
  if (path.start > -span || path.horizon < span) {
    throw InvalidArgument("dyadic_components: path must cover times " + std::to_string(-span) + ".." +
                          std::to_string(span - 1) + " (start <= " + std::to_string(-span) + ")");
  }
  if (path.streamed()) throw InvalidArgument("dyadic_components: path must be materialized");
  std::vector<Matrix<Scalar>> local;
  if (profiles == nullptr) {
    local = lagged_conditional_profiles(model, f, d);
    profiles = &local;
  }
  const auto& e = *profiles;
  const auto W = [&](std::int64_t t) { return path.at(t); };

  DyadicComponents<Scalar> out;
  out.depth = d;
  out.geometry = f;
  out.adapted.resize(span, f.dims());
  for (std::int64_t l = 0; l < span; ++l) out.adapted.row(l) = f.values.row(W(l)) - e[0].row(W(l - 1));
  for (int k = 0; k < d; ++k) {
    const std::int64_t count = std::int64_t{1} << (d - k - 1);
    const std::int64_t stride = std::int64_t{1} << (k + 1);
    const std::int64_t half = std::int64_t{1} << k;
    Matrix<Scalar> mk(count, f.dims());
    Matrix<Scalar> lk(count, f.dims());
    const auto& ek = e[static_cast<std::size_t>(k)];
    const auto& ek1 = e[static_cast<std::size_t>(k) + 1];
    for (std::int64_t l = 0; l < count; ++l) {
      const std::int64_t t = stride * l;
      lk.row(l) = ek.row(W(t - half));
      mk.row(l) = ek.row(W(t - half)) + ek.row(W(t)) - ek1.row(W(t - stride));
    }
    out.martingale.push_back(std::move(mk));
    out.lagged.push_back(std::move(lk));
  }
  out.top = e[static_cast<std::size_t>(d)].row(W(-span));
  return out;
}

/// Per-state conditional mean of each dyadic difference series given the
/// sigma-field it must be orthogonal to: max over k, states, columns of
/// |P^{2^k} e_k + P^{2^{k+1}} e_k - e_{k+1}| and |P f - e_0|.
template <typename Scalar>
Scalar dyadic_conditional_mean_defect(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, int depth) {
  DyadicPowers<Scalar> powers(model);
  const auto e = lagged_conditional_profiles(model, f, depth);
  Scalar worst = (model.apply(f.values) - e[0]).cwiseAbs().maxCoeff();
  for (int k = 0; k < depth; ++k) {
    const auto& ek = e[static_cast<std::size_t>(k)];
    const Matrix<Scalar> mean = powers.apply(std::uint64_t{1} << k, ek) +
                                powers.apply(std::uint64_t{1} << (k + 1), ek) - e[static_cast<std::size_t>(k) + 1];
    worst = std::max(worst, mean.cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Both sides of the pathwise dyadic maximal inequality.
template <typename Scalar = double>
struct DyadicSlack {
  Scalar lhs = 0;
  Scalar adapted_term = 0;
  Scalar martingale_terms = 0;
  Scalar top_term = 0;
  Scalar lagged_terms = 0;
  Scalar rhs() const { return adapted_term + martingale_terms + top_term + lagged_terms; }
  Scalar slack() const { return rhs() - lhs; }
};

namespace detail {

template <typename Scalar>
Scalar max_prefix_norm(const Observable<Scalar>& geometry, const Matrix<Scalar>& rows, Index count) {
  RowVector<Scalar> acc = RowVector<Scalar>::Zero(rows.cols());
  Scalar best(0);
  for (Index i = 0; i < count; ++i) {
    acc += rows.row(i);
    best = std::max(best, geometry.point_norm(acc));
  }
  return best;
}

}  // namespace detail

template <typename Scalar>
DyadicSlack<Scalar> verify_dyadic_inequality(const DyadicComponents<Scalar>& c, const PartialSums<Scalar>& sums) {
  const Index span = Index{1} << c.depth;
  if (sums.count() < span) throw InvalidArgument("verify_dyadic_inequality: need S_1..S_{2^d}");
  DyadicSlack<Scalar> out;
  for (Index i = 0; i < span; ++i) out.lhs = std::max(out.lhs, c.geometry.point_norm(sums.sums.row(i)));
  out.adapted_term = detail::max_prefix_norm(c.geometry, c.adapted, span);
  for (int k = 0; k < c.depth; ++k) {
    const auto& mk = c.martingale[static_cast<std::size_t>(k)];
    out.martingale_terms += detail::max_prefix_norm(c.geometry, mk, mk.rows());
    const auto uk = c.u(k);
    out.lagged_terms += *std::max_element(uk.begin(), uk.end());
  }
  out.top_term = c.u_top();
  return out;
}

enum class MaximalKind { M1, M2 };

/// sup_{1<=n<=horizon} |S_n| / n (M1) or |S_n| / sqrt(n L(L(n))) (M2), from
/// the norms |S_1|, |S_2|, ...
template <typename Scalar>
Scalar maximal_function(const std::vector<Scalar>& sum_norms, MaximalKind kind, std::size_t horizon) {
  if (horizon > sum_norms.size()) throw InvalidArgument("maximal_function: horizon exceeds available sums");
  Scalar best(0);
  for (std::size_t k = 0; k < horizon; ++k) {
    const double n = static_cast<double>(k + 1);
    const Scalar denom = kind == MaximalKind::M1 ? Scalar(n) : Scalar(lil_normalizer(n));
    best = std::max(best, sum_norms[k] / denom);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Monte Carlo maximal-inequality checks
// ---------------------------------------------------------------------------

struct DoobRatio {
  double ratio = 0;      ///< mean(max_k |S_k(d)|^2) / mean(|S_n(d)|^2)
  double sigma = 0;      ///< delta-method Monte Carlo standard error
  bool degenerate = false;
  bool exceeds_two = false;  ///< ratio - 3 sigma > 2
  std::string warning;
};

/// Monte Carlo estimate of ||max_{k<=n} |S_k(d)| ||_2^2 / ||S_n(d)||_2^2 over
/// M stationary paths (streams 0..M-1).
template <typename Scalar>
DoobRatio doob_ratio(const MarkovModel<Scalar>& model, const MartingaleDifference<Scalar>& d, std::int64_t n,
                     std::uint64_t M, std::uint64_t seed, unsigned threads = default_threads()) {
  if (n < 1 || M < 2) throw InvalidArgument("doob_ratio: need n >= 1 and M >= 2");
  struct Sample {
    double max2 = 0;
    double end2 = 0;
  };
  const auto samples = parallel_map<Sample>(M, threads, [&](std::uint64_t stream) {
    PathStream<Scalar> walker(model, -1, seed, stream);
    RowVector<Scalar> acc = RowVector<Scalar>::Zero(d.h.dims());
    RowVector<Scalar> step(d.h.dims());
    Sample s;
    for (std::int64_t k = 0; k < n; ++k) {
      const Index prev = walker.state();
      walker.advance();
      d.value(prev, walker.state(), step);
      acc += step;
      const double r = static_cast<double>(d.h.point_norm(acc));
      s.max2 = std::max(s.max2, r * r);
    }
    const double r = static_cast<double>(d.h.point_norm(acc));
    s.end2 = r * r;
    return s;
  });
  double mx = 0, me = 0;
  for (const auto& s : samples) {
    mx += s.max2;
    me += s.end2;
  }
  const double Md = static_cast<double>(M);
  mx /= Md;
  me /= Md;
  DoobRatio out;
  if (me == 0.0) {
    out.degenerate = true;
    out.warning = "S_n(d) vanishes identically; ratio 0/0";
    return out;
  }
  out.ratio = mx / me;
  double vxx = 0, vee = 0, vxe = 0;
  for (const auto& s : samples) {
    vxx += (s.max2 - mx) * (s.max2 - mx);
    vee += (s.end2 - me) * (s.end2 - me);
    vxe += (s.max2 - mx) * (s.end2 - me);
  }
  vxx /= Md - 1;
  vee /= Md - 1;
  vxe /= Md - 1;
  const double r = out.ratio;
  out.sigma = std::sqrt(std::max(0.0, (vxx - 2 * r * vxe + r * r * vee) / (me * me * Md)));
  out.exceeds_two = out.ratio - 3 * out.sigma > 2.0;
  if (out.sigma > 0.05 * std::max(out.ratio, 1e-300)) {
    out.warning = "Monte Carlo band is wide relative to the ratio; increase M";
  }
  return out;
}

struct HopfRow {
  double lambda = 0;
  double probability = 0;  ///< empirical P(M1 > lambda)
  double bound = 0;        ///< ||X||_1 / lambda
  double slack() const { return bound - probability; }
};

/// Empirical weak-(1,1) check P(sup_{n<=horizon} |S_n|/n > lambda) <= ||X||_1/lambda
/// over M stationary paths (streams 0..M-1). ||X||_1 is exact under pi.
template <typename Scalar>
std::vector<HopfRow> hopf_check(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, std::int64_t horizon,
                                std::uint64_t M, const std::vector<double>& lambdas, std::uint64_t seed,
                                unsigned threads = default_threads()) {
  if (horizon < 1 || M < 1) throw InvalidArgument("hopf_check: need horizon >= 1 and M >= 1");
  for (double l : lambdas)
    if (!(l > 0)) throw InvalidArgument("hopf_check: lambda must be positive");
  const auto maxima = parallel_map<double>(M, threads, [&](std::uint64_t stream) {
    PathStream<Scalar> walker(model, 0, seed, stream);
    RowVector<Scalar> acc = RowVector<Scalar>::Zero(f.dims());
    double best = 0;
    for (std::int64_t n = 1; n <= horizon; ++n) {
      acc += f.values.row(walker.state());
      best = std::max(best, static_cast<double>(f.point_norm(acc)) / double(n));
      if (n < horizon) walker.advance();
    }
    return best;
  });
  double l1 = 0;
  for (Index s = 0; s < model.size(); ++s) l1 += double(model.stationary()[s]) * double(f.point_norm(f.values.row(s)));
  std::vector<HopfRow> out;
  for (double l : lambdas) {
    HopfRow row;
    row.lambda = l;
    row.bound = l1 / l;
    row.probability = double(std::count_if(maxima.begin(), maxima.end(), [&](double m) { return m > l; })) / double(M);
    out.push_back(row);
  }
  return out;
}

struct Cormax2Row {
  int d = 0;
  double lhs = 0;      ///< Monte Carlo ||max_{i<=2^d} |S_i| ||_2
  double bracket = 0;  ///< ||X||_G + sum_{k<=d} 2^{-k/2} ||E_{-2^k}(S_{2^k})||_G
  double ratio = 0;    ///< lhs / (2^{d/2} bracket)
};

struct Cormax2Report {
  std::vector<Cormax2Row> rows;
  double spread = 0;  ///< max ratio / min ratio
  bool bounded = false;
  bool informational = false;
};

/// Bounded-ratio check of ||max_{i<=2^d}|S_i| ||_2 <= C 2^{d/2} (||X||_G + sum ...)
/// for d = d_min..d_max. The constant C is not asserted; the ratio spread is.
template <typename Scalar>
Cormax2Report cormax2_check(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, int d_min, int d_max,
                            std::uint64_t M, std::uint64_t seed, double spread_factor = 4.0,
                            unsigned threads = default_threads()) {
  require_centered(model, f, "cormax2_check");
  if (d_min < 0 || d_max < d_min || d_max > 30) throw InvalidArgument("cormax2_check: bad depth range");
  const auto e = lagged_conditional_profiles(model, f, d_max);
  const std::int64_t span = std::int64_t{1} << d_max;
  // maxima of |S_i|^2 over i <= 2^d, per path and d.
  const auto maxima = parallel_map<std::vector<double>>(M, threads, [&](std::uint64_t stream) {
    std::vector<double> best(static_cast<std::size_t>(d_max) + 1, 0.0);
    PathStream<Scalar> walker(model, 0, seed, stream);
    RowVector<Scalar> acc = RowVector<Scalar>::Zero(f.dims());
    double running = 0;
    for (std::int64_t i = 1; i <= span; ++i) {
      acc += f.values.row(walker.state());
      const double r = static_cast<double>(f.point_norm(acc));
      running = std::max(running, r * r);
      if ((i & (i - 1)) == 0) best[static_cast<std::size_t>(std::countr_zero(static_cast<std::uint64_t>(i)))] = running;
      if (i < span) walker.advance();
    }
    return best;
  });
  Cormax2Report out;
  out.informational = false;
  const double xg = static_cast<double>(gaussian_norm(model, f));
  double bracket_sum = xg;
  double lo = 1e300, hi = 0;
  for (int d = 0; d <= d_max; ++d) {
    bracket_sum += std::pow(2.0, -d / 2.0) * static_cast<double>(gaussian_norm(model, f, e[static_cast<std::size_t>(d)]));
    if (d < d_min) continue;
    double mean = 0;
    for (const auto& m : maxima) mean += m[static_cast<std::size_t>(d)];
    mean /= static_cast<double>(M);
    Cormax2Row row{d, std::sqrt(mean), bracket_sum, 0.0};
    row.ratio = row.bracket > 0 ? row.lhs / (std::pow(2.0, d / 2.0) * row.bracket) : 0.0;
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
    out.rows.push_back(row);
  }
  out.spread = hi > 0 ? hi / lo : 1.0;
  out.bounded = hi == 0 || out.spread <= spread_factor;
  return out;
}

}  // namespace mwlab
