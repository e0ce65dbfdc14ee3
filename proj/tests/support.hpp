// Shared fixtures for the unit tests.
#pragma once

#include "mwlab/models.hpp"

namespace mwlab::fixtures {

/// Two-state chain a = 0.3, b = 0.6: pi = (2/3, 1/3), lambda_2 = 0.1.
inline MarkovModel<double> reference_two_state() { return two_state_model(0.3, 0.6); }

/// Centered indicator of state 0 on the reference chain.
inline Observable<double> centered_indicator(const MarkovModel<double>& m) {
  Vector<double> v = Vector<double>::Zero(m.size());
  v[0] = 1.0;
  return center_observable(m, Observable<double>::scalar(v));
}

/// A centered scalar observable with values drawn from the test stream.
inline Observable<double> random_observable(const MarkovModel<double>& m, std::uint64_t seed) {
  const CounterRng rng(seed, 7);
  Vector<double> v(m.size());
  for (Index i = 0; i < m.size(); ++i) v[i] = rng.uniform(i) * 2.0 - 1.0;
  return center_observable(m, Observable<double>::scalar(v));
}

/// Naive P^n by repeated dense multiplication.
inline Matrix<double> naive_power(const MarkovModel<double>& m, long n) {
  const Matrix<double> P = m.dense_transition();
  Matrix<double> out = Matrix<double>::Identity(m.size(), m.size());
  for (long k = 0; k < n; ++k) out = out * P;
  return out;
}

}  // namespace mwlab::fixtures
