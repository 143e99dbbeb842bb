#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace vdb {

/// Row-major sample layout throughout: one sample per row, one feature per column.
template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVectorX = Eigen::Matrix<T, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using RowVector = RowVectorX<double>;
using Vec2 = Eigen::Vector2d;

/// Shape mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operation called in the wrong lifecycle state (e.g. backward before forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Invalid configuration value; the message names the offending field.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss, gradient or parameter encountered during training.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace vdb
