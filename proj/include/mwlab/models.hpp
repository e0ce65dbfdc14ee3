// Finite stationary Markov models, observables and seeded two-sided paths.
//
// A model is an immutable (P, pi) pair. The canonical two-sided stationary
// chain (W_t) on it carries the filtration F_n = sigma(W_k, k <= n); the
// shift acts on paths by moving the time origin.
#pragma once

#include "mwlab/core.hpp"
#include "mwlab/rng.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mwlab {

// ---------------------------------------------------------------------------
// Quadrature grid for mu
// ---------------------------------------------------------------------------

/// Points s_i with positive weights w_i approximating a measure mu.
template <typename Scalar = double>
struct QuadratureGrid {
  Vector<Scalar> points;
  Vector<Scalar> weights;
  /// Set when the grid discretizes a measure of infinite total mass.
  bool infinite_measure = false;
  /// True when the weights are trapezoidal weights for Lebesgue measure.
  bool lebesgue = false;

  Index size() const { return points.size(); }
  Scalar mass() const { return weights.sum(); }

  void validate() const {
    if (points.size() != weights.size()) {
      throw InvalidArgument("grid: points and weights differ in length");
    }
    for (Index i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > Scalar(0))) {
        throw InvalidArgument("grid: weight " + std::to_string(i) + " is not positive");
      }
    }
  }

  /// Lebesgue measure on [a, b] by the trapezoidal rule with `count` points
  /// (endpoints receive half weight).
  static QuadratureGrid trapezoid(Scalar a, Scalar b, Index count) {
    if (count < 2 || !(b > a)) throw InvalidArgument("trapezoid grid needs count >= 2 and b > a");
    QuadratureGrid g;
    g.points = Vector<Scalar>::LinSpaced(count, a, b);
    const Scalar h = (b - a) / Scalar(count - 1);
    g.weights = Vector<Scalar>::Constant(count, h);
    g.weights[0] = h / 2;
    g.weights[count - 1] = h / 2;
    g.lebesgue = true;
    return g;
  }

  /// Equal weights mass/count at the given points.
  static QuadratureGrid uniform(Vector<Scalar> points, Scalar mass = Scalar(1)) {
    QuadratureGrid g;
    const Index n = points.size();
    g.points = std::move(points);
    g.weights = Vector<Scalar>::Constant(n, mass / Scalar(n));
    return g;
  }
};

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

enum class ObservableKind { scalar, grid };

/// X = f(W_0): a per-state value, either real or L^p(mu)-valued through its
/// values on a quadrature grid. `values` is (states x grid points); scalar
/// observables have one column.
template <typename Scalar = double>
struct Observable {
  ObservableKind kind = ObservableKind::scalar;
  Matrix<Scalar> values;
  QuadratureGrid<Scalar> grid;
  Scalar p = Scalar(2);
  bool centered = false;

  Index states() const { return values.rows(); }
  Index dims() const { return values.cols(); }
  bool is_grid() const { return kind == ObservableKind::grid; }

  static Observable scalar(Vector<Scalar> v) {
    Observable f;
    f.kind = ObservableKind::scalar;
    f.values = std::move(v);
    return f;
  }

  static Observable on_grid(Matrix<Scalar> v, QuadratureGrid<Scalar> grid, Scalar p) {
    if (!(p >= Scalar(1))) throw InvalidArgument("observable: p must be >= 1");
    grid.validate();
    if (v.cols() != grid.size()) throw InvalidArgument("observable: value columns must match grid size");
    Observable f;
    f.kind = ObservableKind::grid;
    f.values = std::move(v);
    f.grid = std::move(grid);
    f.p = p;
    return f;
  }

  /// Same geometry, new values.
  Observable with_values(Matrix<Scalar> v) const {
    Observable g = *this;
    g.values = std::move(v);
    return g;
  }

  /// Norm |x| of one point x of the value space (a row of `values`).
  template <typename Derived>
  Scalar point_norm(const Eigen::MatrixBase<Derived>& x) const {
    using std::abs;
    using std::pow;
    if (kind == ObservableKind::scalar) return abs(x(0));
    if (p == Scalar(2)) return std::sqrt((grid.weights.transpose().array() * x.array().square()).sum());
    if (p == Scalar(1)) return (grid.weights.transpose().array() * x.array().abs()).sum();
    return pow((grid.weights.transpose().array() * x.array().abs().pow(p)).sum(), Scalar(1) / p);
  }
};

// ---------------------------------------------------------------------------
// Markov models
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
std::vector<std::vector<Index>> adjacency(const SparseMatrix<Scalar>& P) {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(P.rows()));
  for (Index r = 0; r < P.outerSize(); ++r) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(P, r); it; ++it) {
      if (it.value() > Scalar(0)) adj[static_cast<std::size_t>(r)].push_back(it.col());
    }
  }
  return adj;
}

/// Strongly connected components (Kosaraju, iterative). Returns component id per state.
inline std::vector<Index> strong_components(const std::vector<std::vector<Index>>& adj, Index& count) {
  const auto n = adj.size();
  std::vector<std::vector<Index>> radj(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (Index v : adj[u]) radj[static_cast<std::size_t>(v)].push_back(static_cast<Index>(u));
  }
  std::vector<char> seen(n, 0);
  std::vector<Index> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::pair<Index, std::size_t>> stack{{static_cast<Index>(s), 0}};
    seen[s] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      const auto& out = adj[static_cast<std::size_t>(u)];
      if (next < out.size()) {
        const Index v = out[next++];
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.emplace_back(v, 0);
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  std::vector<Index> comp(n, -1);
  count = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[static_cast<std::size_t>(*it)] >= 0) continue;
    std::vector<Index> stack{*it};
    comp[static_cast<std::size_t>(*it)] = count;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v : radj[static_cast<std::size_t>(u)]) {
        if (comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = count;
          stack.push_back(v);
        }
      }
    }
    ++count;
  }
  return comp;
}

inline std::string describe_classes(const std::vector<Index>& comp, Index count) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(count));
  for (std::size_t s = 0; s < comp.size(); ++s) members[static_cast<std::size_t>(comp[s])].push_back(static_cast<Index>(s));
  std::ostringstream os;
  for (std::size_t c = 0; c < members.size(); ++c) {
    os << (c ? " " : "") << "{";
    const auto& m = members[c];
    for (std::size_t k = 0; k < m.size() && k < 8; ++k) os << (k ? "," : "") << m[k];
    if (m.size() > 8) os << ",...(" << m.size() << " states)";
    os << "}";
  }
  return os.str();
}

/// Period of an irreducible chain: gcd over edges of level(u) + 1 - level(v).
inline Index period(const std::vector<std::vector<Index>>& adj) {
  const auto n = adj.size();
  std::vector<Index> level(n, -1);
  std::vector<Index> queue{0};
  level[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Index u = queue[head];
    for (Index v : adj[static_cast<std::size_t>(u)]) {
      if (level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  Index g = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (Index v : adj[u]) {
      g = std::gcd(g, std::abs(level[u] + 1 - level[static_cast<std::size_t>(v)]));
    }
  }
  return g;
}

}  // namespace detail

/// Throws NotErgodic naming the communicating classes (reducible) or the
/// period (periodic).
template <typename Scalar>
void check_ergodic(const SparseMatrix<Scalar>& P) {
  const auto adj = detail::adjacency(P);
  Index count = 0;
  const auto comp = detail::strong_components(adj, count);
  if (count > 1) {
    throw NotErgodic("chain is reducible; communicating classes: " + detail::describe_classes(comp, count));
  }
  const Index d = detail::period(adj);
  if (d != 1) {
    throw NotErgodic("chain is periodic with period " + std::to_string(d) + "; single class " +
                     detail::describe_classes(comp, count));
  }
}

/// Stationary law of an irreducible aperiodic chain: solves pi (I - P) = 0,
/// sum(pi) = 1 by sparse LU with one balance equation replaced by the
/// normalization.
template <typename Scalar>
Vector<Scalar> stationary_distribution(const SparseMatrix<Scalar>& P) {
  const Index m = P.rows();
  if (P.cols() != m || m == 0) throw InvalidArgument("transition matrix must be square and non-empty");
  check_ergodic(P);
  if (m == 1) return Vector<Scalar>::Ones(1);

  // Row r of A is column r of (I - P), i.e. A = (I - P)^T; last row -> ones.
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(P.nonZeros() + 2 * m));
  for (Index r = 0; r < m; ++r) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(P, r); it; ++it) {
      if (it.col() != m - 1) trip.emplace_back(it.col(), r, -it.value());
    }
  }
  for (Index i = 0; i < m - 1; ++i) trip.emplace_back(i, i, Scalar(1));
  for (Index j = 0; j < m; ++j) trip.emplace_back(m - 1, j, Scalar(1));
  Eigen::SparseMatrix<Scalar> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("stationary_distribution: factorization failed");
  Vector<Scalar> rhs = Vector<Scalar>::Zero(m);
  rhs[m - 1] = Scalar(1);
  Vector<Scalar> pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw NumericalError("stationary_distribution: solve failed");
  pi = pi.cwiseMax(Scalar(0));
  pi /= pi.sum();
  return pi;
}

template <typename Scalar>
Vector<Scalar> stationary_distribution(const Matrix<Scalar>& P) {
  return stationary_distribution<Scalar>(SparseMatrix<Scalar>(P.sparseView()));
}

/// Immutable finite stationary Markov model (P row-stochastic, pi P = pi).
template <typename Scalar = double>
class MarkovModel {
 public:
  /// Largest state count for which dense matrix powers are formed.
  static constexpr Index kDenseLimit = 2048;

  MarkovModel() = default;

  explicit MarkovModel(SparseMatrix<Scalar> P) : P_(std::move(P)) {
    P_.makeCompressed();
    validate_rows();
    pi_ = stationary_distribution<Scalar>(P_);
    validate_stationary();
    build_sampler();
  }

  MarkovModel(SparseMatrix<Scalar> P, Vector<Scalar> pi) : P_(std::move(P)), pi_(std::move(pi)) {
    P_.makeCompressed();
    validate_rows();
    check_ergodic(P_);
    validate_stationary();
    build_sampler();
  }

  static MarkovModel from_dense(const Matrix<Scalar>& P) { return MarkovModel(SparseMatrix<Scalar>(P.sparseView())); }

  Index size() const { return P_.rows(); }
  const SparseMatrix<Scalar>& transition() const { return P_; }
  const Vector<Scalar>& stationary() const { return pi_; }

  Matrix<Scalar> dense_transition() const {
    if (size() > kDenseLimit) {
      throw InvalidArgument("model with " + std::to_string(size()) + " states exceeds the dense limit " +
                            std::to_string(kDenseLimit));
    }
    return Matrix<Scalar>(P_);
  }

  /// (P v) applied column-wise.
  template <typename Derived>
  Matrix<Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    return P_ * v;
  }

  /// pi-mean of each column.
  template <typename Derived>
  RowVector<Scalar> mean(const Eigen::MatrixBase<Derived>& v) const {
    return pi_.transpose() * v;
  }

  /// Next state from `state` given a uniform u in [0, 1).
  Index next_state(Index state, double u) const {
    const auto begin = row_offset_[static_cast<std::size_t>(state)];
    const auto end = row_offset_[static_cast<std::size_t>(state) + 1];
    return sample(begin, end, u);
  }

  /// A state drawn from pi given a uniform u in [0, 1).
  Index initial_state(double u) const {
    auto it = std::upper_bound(pi_cum_.begin(), pi_cum_.end(), u);
    if (it == pi_cum_.end()) --it;
    return static_cast<Index>(it - pi_cum_.begin());
  }

  Scalar stationarity_defect() const {
    return (pi_.transpose() * P_ - pi_.transpose()).cwiseAbs().maxCoeff();
  }

 private:
  void validate_rows() const {
    if (P_.rows() != P_.cols() || P_.rows() == 0) throw InvalidArgument("transition matrix must be square and non-empty");
    for (Index r = 0; r < P_.outerSize(); ++r) {
      Scalar sum(0);
      for (typename SparseMatrix<Scalar>::InnerIterator it(P_, r); it; ++it) {
        if (it.value() < Scalar(0)) {
          throw InvalidArgument("transition matrix has a negative entry in row " + std::to_string(r));
        }
        sum += it.value();
      }
      using std::abs;
      if (abs(sum - Scalar(1)) > Scalar(1e-12)) {
        throw InvalidArgument("row " + std::to_string(r) + " of the transition matrix sums to " +
                              std::to_string(static_cast<double>(sum)));
      }
    }
  }

  void validate_stationary() const {
    using std::abs;
    if (pi_.size() != P_.rows()) throw InvalidArgument("stationary vector has the wrong length");
    if (abs(pi_.sum() - Scalar(1)) > Scalar(1e-12)) throw NumericalError("stationary vector does not sum to 1");
    if ((pi_.array() <= Scalar(0)).any()) throw NumericalError("stationary vector has a non-positive entry");
    if (stationarity_defect() > Scalar(1e-10)) {
      throw NumericalError("pi P != pi (defect " + std::to_string(static_cast<double>(stationarity_defect())) + ")");
    }
  }

  void build_sampler() {
    const Index m = size();
    row_offset_.assign(static_cast<std::size_t>(m) + 1, 0);
    cum_.clear();
    col_.clear();
    for (Index r = 0; r < m; ++r) {
      double acc = 0.0;
      for (typename SparseMatrix<Scalar>::InnerIterator it(P_, r); it; ++it) {
        if (!(it.value() > Scalar(0))) continue;
        acc += static_cast<double>(it.value());
        cum_.push_back(acc);
        col_.push_back(it.col());
      }
      row_offset_[static_cast<std::size_t>(r) + 1] = cum_.size();
    }
    pi_cum_.resize(static_cast<std::size_t>(m));
    double acc = 0.0;
    for (Index i = 0; i < m; ++i) pi_cum_[static_cast<std::size_t>(i)] = acc += static_cast<double>(pi_[i]);
  }

  Index sample(std::size_t begin, std::size_t end, double u) const {
    if (end - begin == 1) return col_[begin];
    auto first = cum_.begin() + static_cast<std::ptrdiff_t>(begin);
    auto last = cum_.begin() + static_cast<std::ptrdiff_t>(end);
    auto it = std::upper_bound(first, last, u * cum_[end - 1]);
    if (it == last) --it;
    return col_[static_cast<std::size_t>(it - cum_.begin())];
  }

  SparseMatrix<Scalar> P_;
  Vector<Scalar> pi_;
  std::vector<std::size_t> row_offset_;
  std::vector<double> cum_;
  std::vector<Index> col_;
  std::vector<double> pi_cum_;
};

/// Every row equal to `row`: an iid sequence with marginal `row`.
template <typename Scalar = double>
MarkovModel<Scalar> iid_model(const Vector<Scalar>& row) {
  const Index m = row.size();
  Matrix<Scalar> P = row.transpose().replicate(m, 1);
  return MarkovModel<Scalar>(SparseMatrix<Scalar>(P.sparseView()), row / row.sum());
}

/// P = [[1-a, a], [b, 1-b]].
template <typename Scalar = double>
MarkovModel<Scalar> two_state_model(Scalar a, Scalar b) {
  Matrix<Scalar> P(2, 2);
  P << Scalar(1) - a, a, b, Scalar(1) - b;
  return MarkovModel<Scalar>::from_dense(P);
}

/// Dense chain with strictly positive entries, reproducible from (states, seed).
template <typename Scalar = double>
MarkovModel<Scalar> random_chain(Index states, std::uint64_t seed) {
  const CounterRng rng(seed, static_cast<std::uint64_t>(states));
  Matrix<Scalar> P(states, states);
  std::int64_t counter = 0;
  for (Index r = 0; r < states; ++r) {
    for (Index c = 0; c < states; ++c) {
      const double u = rng.uniform(counter++);
      P(r, c) = Scalar(0.02 + u * u * u);
    }
    P.row(r) /= P.row(r).sum();
  }
  return MarkovModel<Scalar>::from_dense(P);
}

// ---------------------------------------------------------------------------
// Renewal (Peligrad-Utev) chain
// ---------------------------------------------------------------------------

/// Return-time law p_i = c i^{-tail_exponent}, i = 1..truncation, with
/// c = 1/zeta(tail_exponent). The mass of {tau > truncation} is placed on
/// tau = truncation.
struct RenewalSpec {
  double tail_exponent = 3.0;
  Index truncation = 2048;
};

struct RenewalChain {
  MarkovModel<double> model;
  Vector<double> return_law;  ///< p_i at index i-1
  double normalizer = 0.0;     ///< c = 1/zeta(tail_exponent)
  double tail_mass_dropped = 0.0;
  double mean_return = 0.0;           ///< E tau on the truncated law
  double second_moment_return = 0.0;  ///< E tau^2 on the truncated law
  bool second_moment_diverges = false;  ///< untruncated E tau^2 = infinity
};

/// Chain on {0, ..., N-1}: i -> i-1 for i >= 1, 0 -> i-1 with probability p_i.
/// pi_0 = 1/E tau, pi_i = pi_0 sum_{j >= i+1} p_j.
inline RenewalChain build_renewal_chain(const RenewalSpec& spec) {
  if (!(spec.tail_exponent > 2.0)) {
    throw InvalidArgument("renewal chain needs tail_exponent > 2 (E tau < infinity); got " +
                          std::to_string(spec.tail_exponent));
  }
  if (spec.truncation < 4) throw InvalidArgument("renewal chain needs truncation >= 4");
  const Index N = spec.truncation;
  RenewalChain out;
  out.normalizer = 1.0 / std::riemann_zeta(spec.tail_exponent);
  out.return_law.resize(N);
  double head = 0.0;
  for (Index i = 1; i < N; ++i) {
    out.return_law[i - 1] = out.normalizer * std::pow(static_cast<double>(i), -spec.tail_exponent);
    head += out.return_law[i - 1];
  }
  out.return_law[N - 1] = 1.0 - head;
  out.tail_mass_dropped = out.return_law[N - 1] - out.normalizer * std::pow(static_cast<double>(N), -spec.tail_exponent);
  for (Index i = 1; i <= N; ++i) {
    const double pi_ = out.return_law[i - 1];
    out.mean_return += static_cast<double>(i) * pi_;
    out.second_moment_return += static_cast<double>(i) * static_cast<double>(i) * pi_;
  }
  out.second_moment_diverges = spec.tail_exponent <= 3.0;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(2 * N));
  for (Index i = 1; i <= N; ++i) trip.emplace_back(0, i - 1, out.return_law[i - 1]);
  for (Index i = 1; i < N; ++i) trip.emplace_back(i, i - 1, 1.0);
  SparseMatrix<double> P(N, N);
  P.setFromTriplets(trip.begin(), trip.end());

  // pi_i = pi_0 P(tau >= i+1); the suffix sums are accumulated from the tail.
  Vector<double> pi(N);
  double suffix = 0.0;
  for (Index i = N - 1; i >= 0; --i) {
    suffix += out.return_law[i];  // P(tau >= i+1)
    pi[i] = suffix / out.mean_return;
  }
  pi /= pi.sum();
  out.model = MarkovModel<double>(std::move(P), std::move(pi));
  return out;
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

/// Default cap on materialized path length (states).
inline constexpr std::int64_t kDefaultPathBudget = std::int64_t{1} << 26;

/// States W_t for t in [start, horizon). The draw at time t uses counter t of
/// the (seed, stream) random stream, so any window regenerates identically.
struct Path {
  std::int64_t start = 0;
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<std::int32_t> states;

  std::int64_t length() const { return horizon - start; }
  bool streamed() const { return states.empty() && length() > 0; }
  Index at(std::int64_t t) const { return states[static_cast<std::size_t>(t - start)]; }
};

/// Sequential generator of a stationary path; the streaming form of Path.
template <typename Scalar = double>
class PathStream {
 public:
  PathStream(const MarkovModel<Scalar>& model, std::int64_t start, std::uint64_t seed, std::uint64_t stream)
      : model_(&model), rng_(seed, stream), t_(start), state_(model.initial_state(rng_.uniform(start))) {}

  std::int64_t time() const { return t_; }
  Index state() const { return state_; }

  void advance() {
    ++t_;
    state_ = model_->next_state(state_, rng_.uniform(t_));
  }

 private:
  const MarkovModel<Scalar>* model_;
  CounterRng rng_;
  std::int64_t t_;
  Index state_;
};

/// Materializes states on [start, horizon) unless the length exceeds
/// `budget`, in which case the path is returned in streaming form.
template <typename Scalar>
Path simulate_path(const MarkovModel<Scalar>& model, std::int64_t start, std::int64_t horizon, std::uint64_t seed,
                   std::uint64_t stream, std::int64_t budget = kDefaultPathBudget) {
  if (start > 0) throw InvalidArgument("simulate_path: start must be <= 0");
  if (horizon < 1) throw InvalidArgument("simulate_path: horizon must be >= 1");
  Path path{start, horizon, seed, stream, {}};
  if (path.length() > budget) return path;
  path.states.resize(static_cast<std::size_t>(path.length()));
  PathStream<Scalar> walker(model, start, seed, stream);
  for (std::size_t k = 0;; ++k) {
    path.states[k] = static_cast<std::int32_t>(walker.state());
    if (walker.time() + 1 >= horizon) break;
    walker.advance();
  }
  return path;
}

/// Calls fn(t, state) for t = start..horizon-1, regenerating streamed paths.
template <typename Scalar, typename Fn>
void for_each_state(const MarkovModel<Scalar>& model, const Path& path, Fn&& fn) {
  if (!path.streamed()) {
    for (std::int64_t t = path.start; t < path.horizon; ++t) fn(t, path.at(t));
    return;
  }
  PathStream<Scalar> walker(model, path.start, path.seed, path.stream);
  for (;;) {
    fn(walker.time(), walker.state());
    if (walker.time() + 1 >= path.horizon) break;
    walker.advance();
  }
}

// ---------------------------------------------------------------------------
// Observables on a model
// ---------------------------------------------------------------------------

/// Subtracts the pi-mean of every column.
template <typename Scalar>
Observable<Scalar> center_observable(const MarkovModel<Scalar>& model, const Observable<Scalar>& f) {
  if (f.states() != model.size()) throw InvalidArgument("observable has the wrong number of states");
  Observable<Scalar> g = f;
  g.values.rowwise() -= model.mean(f.values);
  g.centered = true;
  return g;
}

/// Largest |pi-mean| over columns, relative to the observable's scale.
template <typename Scalar>
bool is_centered(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, Scalar tol = Scalar(1e-10)) {
  const Scalar scale = std::max<Scalar>(Scalar(1), f.values.cwiseAbs().maxCoeff());
  return model.mean(f.values).cwiseAbs().maxCoeff() <= tol * scale;
}

template <typename Scalar>
void require_centered(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, const char* who) {
  if (f.states() != model.size()) throw InvalidArgument(std::string(who) + ": observable has the wrong number of states");
  if (!is_centered(model, f)) {
    throw InvalidArgument(std::string(who) + ": observable is not centered under pi");
  }
}

}  // namespace mwlab
