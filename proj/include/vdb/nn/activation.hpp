#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "vdb/nn/dual.hpp"
#include "vdb/nn/types.hpp"

namespace vdb {

enum class Activation { identity, relu, tanh, sigmoid };

Activation parse_activation(std::string_view name);
std::string to_string(Activation act);

/// Logistic function, evaluated on the branch that cannot overflow.
template <typename T>
T sigmoid(const T& x) {
  using std::exp;
  if (x >= T(0.0)) return T(1.0) / (T(1.0) + exp(-x));
  const T e = exp(x);
  return e / (T(1.0) + e);
}

template <typename T>
T activate(Activation act, const T& x) {
  using std::tanh;
  switch (act) {
    case Activation::identity:
      return x;
    case Activation::relu:
      return x > T(0.0) ? x : T(0.0);
    case Activation::tanh:
      return tanh(x);
    case Activation::sigmoid:
      return sigmoid(x);
  }
  return x;
}

/// Derivative of the activation expressed through its output y = act(x).
template <typename T>
T activation_slope(Activation act, const T& y) {
  switch (act) {
    case Activation::identity:
      return T(1.0);
    case Activation::relu:
      return y > T(0.0) ? T(1.0) : T(0.0);
    case Activation::tanh:
      return T(1.0) - y * y;
    case Activation::sigmoid:
      return y * (T(1.0) - y);
  }
  return T(1.0);
}

template <typename Derived>
auto activate_all(Activation act, const Eigen::MatrixBase<Derived>& x) {
  using T = typename Derived::Scalar;
  return x.unaryExpr([act](const T& v) { return activate(act, v); }).eval();
}

template <typename Derived>
auto activation_slope_all(Activation act, const Eigen::MatrixBase<Derived>& y) {
  using T = typename Derived::Scalar;
  return y.unaryExpr([act](const T& v) { return activation_slope(act, v); }).eval();
}

}  // namespace vdb
