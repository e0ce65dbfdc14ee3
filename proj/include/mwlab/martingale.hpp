// Martingale approximation of Markov functionals.
//
// Q X = E_0(X o theta) acts on X = f(W_0) as P f. The Poisson equation
// (I - P) h = f gives f(W_k) = [h(W_k) - (Ph)(W_{k-1})] + [(Ph)(W_{k-1}) - (Ph)(W_k)],
// a martingale difference plus a coboundary.
#pragma once

#include "mwlab/conditions.hpp"

#include <Eigen/LU>

#include <cmath>
#include <memory>
#include <string>

namespace mwlab {

template <typename Scalar>
Observable<Scalar> apply_q(const MarkovModel<Scalar>& model, const Observable<Scalar>& f) {
  Observable<Scalar> g = f.with_values(model.apply(f.values));
  return g;
}

/// Centered solution of (I - P) h = f.
template <typename Scalar = double>
struct PoissonSolution {
  Observable<Scalar> h;
  Scalar residual = 0;         ///< max |(I - P) h - f|
  Scalar mean_defect = 0;      ///< max |pi(h)| over columns
  Scalar condition_estimate = 0;
  bool centered() const { return mean_defect <= Scalar(1e-10); }
};

/// Factorization of the bordered system
///   [ I - P   1 ] [h]   [f]
///   [ pi^T    0 ] [c] = [0]
/// whose unique solution has pi(h) = 0 and c = pi(f). Reusable for many
/// right-hand sides (one per grid point).
template <typename Scalar = double>
class PoissonSolver {
 public:
  static constexpr double kMaxCondition = 1e12;

  explicit PoissonSolver(const MarkovModel<Scalar>& model) : model_(&model) {
    const Index m = model.size();
    Matrix<Scalar> A = Matrix<Scalar>::Zero(m + 1, m + 1);
    A.topLeftCorner(m, m) = Matrix<Scalar>::Identity(m, m) - model.dense_transition();
    A.topRightCorner(m, 1).setOnes();
    A.bottomLeftCorner(1, m) = model.stationary().transpose();
    lu_.compute(A);
    const Scalar rc = lu_.rcond();
    condition_ = rc > Scalar(0) ? Scalar(1) / rc : std::numeric_limits<Scalar>::infinity();
  }

  Scalar condition_estimate() const { return condition_; }

  PoissonSolution<Scalar> solve(const Observable<Scalar>& f) const {
    require_centered(*model_, f, "solve_poisson");
    if (!(condition_ <= Scalar(kMaxCondition))) {
      throw NumericalError("solve_poisson: condition number estimate " + std::to_string(static_cast<double>(condition_)) +
                           " exceeds 1e12; use resolvent_approx instead");
    }
    const Index m = model_->size();
    Matrix<Scalar> rhs = Matrix<Scalar>::Zero(m + 1, f.dims());
    rhs.topRows(m) = f.values;
    Matrix<Scalar> sol = lu_.solve(rhs);
    PoissonSolution<Scalar> out;
    out.h = f.with_values(sol.topRows(m));
    out.h.centered = true;
    out.residual = (out.h.values - model_->apply(out.h.values) - f.values).cwiseAbs().maxCoeff();
    out.mean_defect = model_->mean(out.h.values).cwiseAbs().maxCoeff();
    out.condition_estimate = condition_;
    return out;
  }

 private:
  const MarkovModel<Scalar>* model_;
  Eigen::PartialPivLU<Matrix<Scalar>> lu_;
  Scalar condition_ = 0;
};

template <typename Scalar>
PoissonSolution<Scalar> solve_poisson(const MarkovModel<Scalar>& model, const Observable<Scalar>& f) {
  return PoissonSolver<Scalar>(model).solve(f);
}

/// Abel surrogate Y_eps = sum_k (1-eps)^k P^k f. Summation stops when the
/// remainder bound (1-eps)^k ||P^k f||_inf / eps drops below 1e-14 ||f||_inf
/// (P is a sup-norm contraction).
template <typename Scalar>
Observable<Scalar> resolvent_approx(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, Scalar eps,
                                    long max_terms = 100000000) {
  require_centered(model, f, "resolvent_approx");
  if (!(eps > Scalar(0) && eps <= Scalar(1))) throw InvalidArgument("resolvent_approx: eps must lie in (0, 1]");
  const Scalar scale = f.values.cwiseAbs().maxCoeff();
  Matrix<Scalar> term = f.values;
  Matrix<Scalar> sum = term;
  const Scalar decay = Scalar(1) - eps;
  Scalar weight(1);
  for (long k = 1; k < max_terms && decay > Scalar(0); ++k) {
    if (weight * term.cwiseAbs().maxCoeff() / eps <= Scalar(1e-14) * scale) break;
    term = model.apply(term);
    weight *= decay;
    sum += weight * term;
  }
  Observable<Scalar> y = f.with_values(std::move(sum));
  y.centered = true;
  return y;
}

/// Cesaro defect ||V_n f||_G / n with V_n = I + P + ... + P^{n-1}.
template <typename Scalar>
Scalar cesaro_defect(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, std::uint64_t n) {
  return gaussian_norm(model, f, conditional_sum_profile(model, f, n)) / Scalar(n);
}

/// d(w, w') = h(w') - (Ph)(w), the martingale difference D(X) = Y - E_{-1}(Y)
/// with Y = h(W_0), evaluated on the pair (W_{-1}, W_0) = (w, w').
template <typename Scalar = double>
struct MartingaleDifference {
  Observable<Scalar> h;
  Matrix<Scalar> Ph;
  /// E[d_i^2] per grid point (one entry for scalar observables).
  Vector<Scalar> sigma2;

  template <typename Out>
  void value(Index prev, Index curr, Out&& out) const {
    out = h.values.row(curr) - Ph.row(prev);
  }

  Scalar scalar_value(Index prev, Index curr, Index column = 0) const {
    return h.values(curr, column) - Ph(prev, column);
  }
};

template <typename Scalar>
MartingaleDifference<Scalar> martingale_difference(const MarkovModel<Scalar>& model,
                                                   const PoissonSolution<Scalar>& poisson) {
  MartingaleDifference<Scalar> d;
  d.h = poisson.h;
  d.Ph = model.apply(poisson.h.values);
  const auto& pi = model.stationary();
  d.sigma2 = (pi.transpose() * d.h.values.array().square().matrix() - pi.transpose() * d.Ph.array().square().matrix())
                 .transpose();
  return d;
}

template <typename Scalar>
MartingaleDifference<Scalar> martingale_difference(const MarkovModel<Scalar>& model, const Observable<Scalar>& f) {
  return martingale_difference(model, solve_poisson(model, f));
}

/// Largest |sum_{w'} P(w, w') d(w, w')| over states and columns.
template <typename Scalar>
Scalar martingale_defect(const MarkovModel<Scalar>& model, const MartingaleDifference<Scalar>& d) {
  return (model.apply(d.h.values) - d.Ph).cwiseAbs().maxCoeff();
}

/// K(i, j) = E[d_i d_j] = pi(h_i h_j) - pi(Ph_i Ph_j), the limit covariance
/// lim cov(S_n(X_i), S_n(X_j)) / n over grid coordinates.
template <typename Scalar = double>
struct CovarianceOperator {
  Matrix<Scalar> K;
  Scalar scalar() const { return K(0, 0); }
  Index dims() const { return K.rows(); }
};

template <typename Scalar>
CovarianceOperator<Scalar> asymptotic_covariance(const MarkovModel<Scalar>& model, const MartingaleDifference<Scalar>& d) {
  const auto& pi = model.stationary();
  CovarianceOperator<Scalar> cov;
  cov.K = d.h.values.transpose() * pi.asDiagonal() * d.h.values - d.Ph.transpose() * pi.asDiagonal() * d.Ph;
  cov.K = (cov.K + cov.K.transpose()) / Scalar(2);
  return cov;
}

template <typename Scalar>
CovarianceOperator<Scalar> asymptotic_covariance(const MarkovModel<Scalar>& model, const Observable<Scalar>& f) {
  return asymptotic_covariance(model, martingale_difference(model, f));
}

/// Variance of the dual functional x*(X) = sum_i w_i u_i X_i under K.
template <typename Scalar>
Scalar directional_variance(const CovarianceOperator<Scalar>& cov, const Vector<Scalar>& weights,
                            const Vector<Scalar>& direction) {
  const Vector<Scalar> a = weights.cwiseProduct(direction);
  return a.dot(cov.K * a);
}

/// Exact ||S_n(X) - S_n(d)||_2 = ||(Ph)(W_{-1}) - (Ph)(W_{n-1})||_{2,X}.
/// Real case: (2 pi((Ph)^2) - 2 pi(Ph P^n Ph))^{1/2}.
template <typename Scalar>
Scalar approximation_error(const MarkovModel<Scalar>& model, const MartingaleDifference<Scalar>& d, std::uint64_t n) {
  if (n == 0) return Scalar(0);
  const auto& pi = model.stationary();
  DyadicPowers<Scalar> powers(model);
  if (!d.h.is_grid()) {
    const Vector<Scalar> g = d.Ph.col(0);
    const Vector<Scalar> shifted = powers.apply(n, Matrix<Scalar>(g)).col(0);
    const Scalar sq = Scalar(2) * pi.dot(g.cwiseAbs2()) - Scalar(2) * pi.dot(g.cwiseProduct(shifted));
    return std::sqrt(std::max(sq, Scalar(0)));
  }
  const Matrix<Scalar> Pn = powers.matrix(n);
  Scalar acc(0);
  for (Index w = 0; w < Pn.rows(); ++w) {
    for (Index v = 0; v < Pn.cols(); ++v) {
      if (Pn(w, v) == Scalar(0)) continue;
      const Scalar r = d.h.point_norm(d.Ph.row(w) - d.Ph.row(v));
      acc += pi[w] * Pn(w, v) * r * r;
    }
  }
  return std::sqrt(acc);
}

/// Autocovariances gamma_k = pi(f P^k f), k = 0..count-1, of a real observable.
template <typename Scalar>
Vector<Scalar> autocovariances(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, Index count,
                               Index column = 0) {
  const auto& pi = model.stationary();
  const Vector<Scalar> base = f.values.col(column);
  Vector<Scalar> v = base;
  Vector<Scalar> out(count);
  for (Index k = 0; k < count; ++k) {
    out[k] = pi.dot(base.cwiseProduct(v));
    v = model.transition() * v;
  }
  return out;
}

/// sigma^2 = gamma_0 + 2 sum_{k=1}^{K} gamma_k.
template <typename Scalar>
Scalar autocovariance_series_variance(const MarkovModel<Scalar>& model, const Observable<Scalar>& f, Index K) {
  const Vector<Scalar> g = autocovariances(model, f, K + 1);
  return g[0] + Scalar(2) * g.tail(K).sum();
}

/// Exact Var(S_n)/n = gamma_0 + 2 sum_{k=1}^{n-1} (1 - k/n) gamma_k for each
/// requested n (sorted ascending), by one pass of sparse products.
template <typename Scalar>
std::vector<Scalar> variance_growth(const MarkovModel<Scalar>& model, const Observable<Scalar>& f,
                                    const std::vector<std::int64_t>& ns) {
  require_centered(model, f, "variance_growth");
  if (ns.empty()) return {};
  const auto& pi = model.stationary();
  const Vector<Scalar> base = f.values.col(0);
  const Vector<Scalar> weighted = pi.cwiseProduct(base);
  Vector<Scalar> v = base;
  // sum gamma_k and sum k gamma_k accumulated up to each requested n.
  Scalar sum_g(0), sum_kg(0), gamma0(0);
  std::vector<Scalar> out;
  std::size_t next = 0;
  const std::int64_t top = ns.back();
  for (std::int64_t k = 0; k < top && next < ns.size(); ++k) {
    const Scalar gk = weighted.dot(v);
    if (k == 0) {
      gamma0 = gk;
    } else {
      sum_g += gk;
      sum_kg += Scalar(k) * gk;
    }
    while (next < ns.size() && ns[next] == k + 1) {
      const Scalar n = Scalar(ns[next]);
      out.push_back(gamma0 + Scalar(2) * (sum_g - sum_kg / n));
      ++next;
    }
    v = model.transition() * v;
  }
  return out;
}

}  // namespace mwlab
