// Common aliases, error types and small numeric helpers shared by every module.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mwlab {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// Precondition violated by the caller (bad exponent, uncentered input, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not be completed to the required accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The chain is reducible or periodic; the message names the classes.
class NotErgodic : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// sigma^2 = 0 where a non-degenerate Gaussian limit is required.
class DegenerateLimit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// L(x) = max(log x, 1).
inline double log_floor1(double x) { return x > std::exp(1.0) ? std::log(x) : 1.0; }

/// sqrt(n L(L(n))), the LIL normalizer without the factor 2.
inline double lil_normalizer(double n) { return std::sqrt(n * log_floor1(log_floor1(n))); }

/// sqrt(2 n L(L(n))).
inline double lil_normalizer2(double n) { return std::sqrt(2.0 * n * log_floor1(log_floor1(n))); }

}  // namespace mwlab
