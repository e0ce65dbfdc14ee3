// Exact projective-condition norms for Markov functionals.
//
// For X = f(W_0) the conditional expectations are state functions:
//   E_0(X o theta^k)      = (P^k f)(W_0)
//   E_0(S_n(X))           = g_n(W_0),  g_n = sum_{k<n} P^k f
//   E_{-m}(S_m) o theta^t = (P^m g_m)(W_{t-m})
// so every series below is a finite linear-algebra computation.
#pragma once

#include "mwlab/models.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mwlab {

// ---------------------------------------------------------------------------
// Norms of state functions Z(W_0) in L^2(Omega, X)
// ---------------------------------------------------------------------------

/// ||Z||_{2,X} = (sum_w pi_w |Z(w)|_X^2)^{1/2}.
template <typename Scalar, typename Derived>
Scalar l2_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& geometry,
               const Eigen::MatrixBase<Derived>& Z) {
  const auto& pi = model.stationary();
  Scalar acc(0);
  for (Index w = 0; w < Z.rows(); ++w) {
    const Scalar r = geometry.point_norm(Z.row(w));
    acc += pi[w] * r * r;
  }
  return std::sqrt(acc);
}

/// Cotype-2 form (Sum_i w_i (E|Z_i|^2)^{p/2})^{1/p}, the pregaussian norm of
/// an L^p-valued variable for p <= 2.
template <typename Scalar, typename Derived>
Scalar pregaussian_cotype_form(const MarkovModel<Scalar>& model, const Observable<Scalar>& geometry,
                               const Eigen::MatrixBase<Derived>& Z) {
  if (!geometry.is_grid()) return l2_norm(model, geometry, Z);
  const RowVector<Scalar> second = model.stationary().transpose() * Z.array().square().matrix();
  const Scalar p = geometry.p;
  Scalar acc(0);
  for (Index i = 0; i < second.size(); ++i) acc += geometry.grid.weights[i] * std::pow(second[i], p / 2);
  return std::pow(acc, Scalar(1) / p);
}

/// Type-2 form ||Z||_{2,L^p}, equivalent to the pregaussian norm for p >= 2.
template <typename Scalar, typename Derived>
Scalar pregaussian_type_form(const MarkovModel<Scalar>& model, const Observable<Scalar>& geometry,
                             const Eigen::MatrixBase<Derived>& Z) {
  return l2_norm(model, geometry, Z);
}

/// Surrogate ||Z||_G = ||Z||_2 + ||G(Z)||_2 with ||G(Z)||_2 given by the
/// cotype-2 form when p < 2 and the type-2 form when p >= 2. For real Z this
/// is 2 ||Z||_2. Equivalence constants C_p are taken as 1.
template <typename Scalar, typename Derived>
Scalar gaussian_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& geometry,
                     const Eigen::MatrixBase<Derived>& Z) {
  if (geometry.is_grid() && !(geometry.p >= Scalar(1))) throw InvalidArgument("gaussian_norm: p must be >= 1");
  const Scalar strong = l2_norm(model, geometry, Z);
  if (geometry.is_grid() && geometry.p < Scalar(2)) return strong + pregaussian_cotype_form(model, geometry, Z);
  return strong + pregaussian_type_form(model, geometry, Z);
}

template <typename Scalar>
Scalar gaussian_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& f) {
  return gaussian_norm(model, f, f.values);
}

/// Norm ||D||_{2,X} of a function of the pair (W_{-1}, W_0) = (w, w'),
/// D(w, w') = B(w') - A(w), under pi_w P(w, w').
template <typename Scalar>
Scalar pair_l2_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& geometry, const Matrix<Scalar>& A,
                    const Matrix<Scalar>& B) {
  const auto& P = model.transition();
  const auto& pi = model.stationary();
  Scalar acc(0);
  RowVector<Scalar> diff(A.cols());
  for (Index w = 0; w < P.outerSize(); ++w) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(P, w); it; ++it) {
      diff = B.row(it.col()) - A.row(w);
      const Scalar r = geometry.point_norm(diff);
      acc += pi[w] * it.value() * r * r;
    }
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Matrix powers and conditional sum profiles
// ---------------------------------------------------------------------------

/// Dense P^{2^k}, k = 0, 1, ..., computed by repeated squaring on demand.
template <typename Scalar>
class DyadicPowers {
 public:
  explicit DyadicPowers(const MarkovModel<Scalar>& model) : model_(&model) {
    if (model.size() <= MarkovModel<Scalar>::kDenseLimit) powers_.push_back(model.dense_transition());
  }

  bool dense() const { return !powers_.empty(); }

  const Matrix<Scalar>& power(int k) {
    while (static_cast<int>(powers_.size()) <= k) powers_.push_back(powers_.back() * powers_.back());
    return powers_[static_cast<std::size_t>(k)];
  }

  /// P^n v by binary decomposition (dense) or n sparse products.
  Matrix<Scalar> apply(std::uint64_t n, Matrix<Scalar> v) {
    if (!dense()) {
      for (std::uint64_t j = 0; j < n; ++j) v = model_->apply(v);
      return v;
    }
    for (int k = 0; n != 0; ++k, n >>= 1) {
      if (n & 1u) v = power(k) * v;
    }
    return v;
  }

  /// P^n as a dense matrix.
  Matrix<Scalar> matrix(std::uint64_t n) {
    const Index m = model_->size();
    Matrix<Scalar> out = Matrix<Scalar>::Identity(m, m);
    for (int k = 0; n != 0; ++k, n >>= 1) {
      if (n & 1u) out = power(k) * out;
    }
    return out;
  }

 private:
  const MarkovModel<Scalar>* model_;
  std::vector<Matrix<Scalar>> powers_;
};

/// g_{2^k} for k = 0..depth via g_{2n} = g_n + P^n g_n.
template <typename Scalar>
std::vector<Matrix<Scalar>> dyadic_sum_profiles(const MarkovModel<Scalar>& /*model*/, const Observable<Scalar>& f,
                                                int depth, DyadicPowers<Scalar>& powers) {
  std::vector<Matrix<Scalar>> g{f.values};
  g.reserve(static_cast<std::size_t>(depth) + 1);
  for (int k = 0; k < depth; ++k) {
    Matrix<Scalar> shifted = powers.dense() ? Matrix<Scalar>(powers.power(k) * g.back())
                                            : powers.apply(std::uint64_t{1} << k, g.back());
    g.push_back(g.back() + shifted);
  }
  return g;
}

/// g_n = sum_{k<n} P^k f, the state function realizing E_0(S_n).
template <typename Scalar>
Matrix<Scalar> conditional_sum_profile(const MarkovModel<Scalar>& model, const Observable<Scalar>& f,
                                       std::uint64_t n) {
  require_centered(model, f, "conditional_sum_profile");
  if (n == 0) throw InvalidArgument("conditional_sum_profile: n must be >= 1");
  DyadicPowers<Scalar> powers(model);
  if (!powers.dense()) {
    Matrix<Scalar> term = f.values;
    Matrix<Scalar> g = term;
    for (std::uint64_t k = 1; k < n; ++k) {
      term = model.apply(term);
      g += term;
    }
    return g;
  }
  int top = 0;
  while ((n >> top) > 1) ++top;
  const auto blocks = dyadic_sum_profiles(model, f, top, powers);
  // g_n = sum over set bits k (high to low) of P^{offset} g_{2^k}.
  Matrix<Scalar> g = Matrix<Scalar>::Zero(f.values.rows(), f.values.cols());
  std::uint64_t offset = 0;
  for (int k = top; k >= 0; --k) {
    if ((n >> k) & 1u) {
      g += powers.apply(offset, blocks[static_cast<std::size_t>(k)]);
      offset += std::uint64_t{1} << k;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Series traces
// ---------------------------------------------------------------------------

/// Terms and partial sums of a nonnegative series, starting at `first_index`.
template <typename Scalar = double>
struct SeriesTrace {
  std::string name;
  long first_index = 0;
  std::vector<Scalar> terms;
  std::vector<Scalar> partials;
  /// Certified bound on the remainder after the last term, if any.
  std::optional<Scalar> tail_estimate;
  bool stopped_early = false;

  Scalar sum() const { return partials.empty() ? Scalar(0) : partials.back(); }
  Scalar last_term() const { return terms.empty() ? Scalar(0) : terms.back(); }
  long last_index() const { return first_index + static_cast<long>(terms.size()) - 1; }
};

/// Accumulates series terms with the stopping and tail-certification rules:
/// stop once a term falls below 1e-14 times the first term; certify a
/// geometric tail when the last five successive ratios agree to 5%.
template <typename Scalar>
class SeriesBuilder {
 public:
  SeriesBuilder(std::string name, long first_index, bool zero_is_absorbing = false)
      : zero_absorbing_(zero_is_absorbing) {
    trace_.name = std::move(name);
    trace_.first_index = first_index;
  }

  /// Adds a term; returns false once the series should stop.
  bool push(Scalar term) {
    if (term < Scalar(0)) term = Scalar(0);
    const Scalar previous = trace_.sum();
    trace_.terms.push_back(term);
    trace_.partials.push_back(previous + term);
    if (trace_.terms.size() == 1) return true;
    if (term < Scalar(1e-14) * trace_.terms.front()) {
      trace_.stopped_early = true;
      return false;
    }
    return true;
  }

  SeriesTrace<Scalar> finish() {
    const auto& t = trace_.terms;
    if (!t.empty() && t.back() == Scalar(0) && zero_absorbing_) {
      trace_.tail_estimate = Scalar(0);
    } else if (t.size() >= 6) {
      Scalar lo(1e300), hi(0);
      bool ok = true;
      for (std::size_t j = t.size() - 5; j < t.size(); ++j) {
        if (!(t[j - 1] > Scalar(0))) {
          ok = false;
          break;
        }
        const Scalar r = t[j] / t[j - 1];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (ok && hi < Scalar(1) && hi - lo <= Scalar(0.05) * hi) {
        trace_.tail_estimate = t.back() * hi / (Scalar(1) - hi);
      }
    }
    return std::move(trace_);
  }

 private:
  SeriesTrace<Scalar> trace_;
  bool zero_absorbing_;
};

// ---------------------------------------------------------------------------
// Condition series
// ---------------------------------------------------------------------------

/// Partial sums of sum_{n=0}^{depth} ||E_0(S_{2^n})||_G / 2^{n/2}.
template <typename Scalar>
SeriesTrace<Scalar> mw2_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, int depth) {
  require_centered(model, f, "mw2_norm");
  if (depth < 0) throw InvalidArgument("mw2_norm: depth must be >= 0");
  DyadicPowers<Scalar> powers(model);
  SeriesBuilder<Scalar> series("mw2", 0);
  Matrix<Scalar> g = f.values;
  for (int n = 0; n <= depth; ++n) {
    if (n > 0) {
      Matrix<Scalar> shifted = powers.dense() ? Matrix<Scalar>(powers.power(n - 1) * g)
                                              : powers.apply(std::uint64_t{1} << (n - 1), g);
      g += shifted;
    }
    const Scalar term = gaussian_norm(model, f, g) / std::pow(Scalar(2), Scalar(n) / 2);
    if (!series.push(term)) break;
  }
  return series.finish();
}

/// N_p series: sum_{n>=1} ||E_0(X_{n-1})||_{(p)} / n^{1/2} with the mixed norm
/// (Sum_i w_i ||.||_2^p)^{1/p} for 1 <= p < 2 and ||(Sum_i w_i |.|^p)^{1/p}||_2
/// for p >= 2.
template <typename Scalar>
SeriesTrace<Scalar> np_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, Scalar p, long n_max) {
  require_centered(model, f, "np_norm");
  if (!f.is_grid()) throw InvalidArgument("np_norm: N_p is defined for L^p-valued (grid) observables only");
  if (!(p >= Scalar(1))) throw InvalidArgument("np_norm: p must be >= 1");
  Observable<Scalar> geometry = f;
  geometry.p = p;
  SeriesBuilder<Scalar> series("np", 1, true);
  Matrix<Scalar> v = f.values;
  for (long n = 1; n <= n_max; ++n) {
    if (n > 1) v = model.apply(v);
    const Scalar norm = p < Scalar(2) ? pregaussian_cotype_form(model, geometry, v) : l2_norm(model, geometry, v);
    if (!series.push(norm / std::sqrt(Scalar(n)))) break;
  }
  return series.finish();
}

/// Sum_{n>=1} ||E_0(X o theta^{n-1})||_G / n^{1/2}.
template <typename Scalar>
SeriesTrace<Scalar> strengthened_sum(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, long n_max) {
  require_centered(model, f, "strengthened_sum");
  SeriesBuilder<Scalar> series("strengthened", 1, true);
  Matrix<Scalar> v = f.values;
  for (long n = 1; n <= n_max; ++n) {
    if (n > 1) v = model.apply(v);
    if (!series.push(gaussian_norm(model, f, v) / std::sqrt(Scalar(n)))) break;
  }
  return series.finish();
}

/// Sum_{n>=0} ||E_0(X o theta^n) - E_{-1}(X o theta^n)||_{2,X}. For real X
/// the squared term is pi((P^n f)^2) - pi((P^{n+1} f)^2).
template <typename Scalar>
SeriesTrace<Scalar> h2_norm(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, long n_max) {
  require_centered(model, f, "h2_norm");
  SeriesBuilder<Scalar> series("h2", 0, true);
  const auto& pi = model.stationary();
  Matrix<Scalar> v = f.values;
  Matrix<Scalar> next = model.apply(v);
  for (long n = 0; n <= n_max; ++n) {
    Scalar term;
    if (!f.is_grid()) {
      const Scalar sq = pi.dot(v.col(0).cwiseAbs2()) - pi.dot(next.col(0).cwiseAbs2());
      const Scalar scale = std::max(Scalar(1), pi.dot(v.col(0).cwiseAbs2()));
      if (sq < Scalar(-1e-12) * scale) {
        throw NumericalError("h2_norm: negative squared term " + std::to_string(static_cast<double>(sq)) +
                             " at n = " + std::to_string(n));
      }
      term = std::sqrt(std::max(sq, Scalar(0)));
    } else {
      term = pair_l2_norm(model, f, next, v);
    }
    if (!series.push(term)) break;
    v = next;
    next = model.apply(v);
  }
  return series.finish();
}

/// Maximal correlation of (W_0, W_n): the second singular value of
/// diag(pi)^{1/2} P^n diag(pi)^{-1/2}. For a Markov chain this equals
/// rho(sigma(W_k, k <= 0), sigma(W_k, k >= n)).
template <typename Scalar>
Scalar rho_maximal_correlation(const MarkovModel<Scalar>& model, std::uint64_t n, DyadicPowers<Scalar>& powers) {
  const Index m = model.size();
  if (m == 1) return Scalar(0);
  if (n == 0) return Scalar(1);
  const Vector<Scalar> root = model.stationary().cwiseSqrt();
  const Matrix<Scalar> A = root.asDiagonal() * powers.matrix(n) * root.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(A);
  const Scalar s = svd.singularValues()[1];
  return std::clamp(s, Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar rho_maximal_correlation(const MarkovModel<Scalar>& model, std::uint64_t n) {
  DyadicPowers<Scalar> powers(model);
  return rho_maximal_correlation(model, n, powers);
}

/// Partial sums of sum_{n>=1} rho(2^n), n = 1..n_max.
template <typename Scalar>
SeriesTrace<Scalar> rho_dyadic_series(const MarkovModel<Scalar>& model, int n_max) {
  DyadicPowers<Scalar> powers(model);
  SeriesBuilder<Scalar> series("rho_dyadic", 1, true);
  for (int n = 1; n <= n_max && n < 63; ++n) {
    if (!series.push(rho_maximal_correlation(model, std::uint64_t{1} << n, powers))) break;
  }
  return series.finish();
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ConditionReport {
  std::optional<SeriesTrace<double>> mw2;
  std::optional<SeriesTrace<double>> np;
  std::optional<SeriesTrace<double>> strengthened;
  std::optional<SeriesTrace<double>> h2;
  std::optional<SeriesTrace<double>> rho_dyadic;
  std::vector<std::string> notes;

  std::vector<const SeriesTrace<double>*> series() const {
    std::vector<const SeriesTrace<double>*> out;
    for (const auto* s : {&mw2, &np, &strengthened, &h2, &rho_dyadic}) {
      if (s->has_value()) out.push_back(&s->value());
    }
    return out;
  }
};

inline constexpr const char* kRhoMarkovNote =
    "rho(n) is computed for the pair (W_0, W_n); equality with the past/future sigma-field coefficient relies on "
    "the Markov property";

}  // namespace mwlab
