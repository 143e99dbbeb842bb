#pragma once

#include <cmath>
#include <ostream>

#include <Eigen/Core>

namespace vdb {

/// First-order forward-mode dual number a + b·ε with ε² = 0.
///
/// Running a reverse-mode adjoint pass in Dual arithmetic, with the inputs
/// seeded by a tangent direction v, yields the directional derivative of every
/// gradient along v. The gradient penalty uses this to differentiate
/// ½‖∇ₓD‖² with respect to the network parameters exactly.
struct Dual {
  double val = 0.0;
  double eps = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT: implicit lift of constants
  constexpr Dual(double v, double e) : val(v), eps(e) {}

  Dual& operator+=(const Dual& o) {
    val += o.val;
    eps += o.eps;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val -= o.val;
    eps -= o.eps;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    eps = eps * o.val + val * o.eps;
    val *= o.val;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    eps = (eps * o.val - val * o.eps) / (o.val * o.val);
    val /= o.val;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.val, -a.eps}; }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
inline bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.val <= b.val; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.val >= b.val; }
inline bool operator==(const Dual& a, const Dual& b) { return a.val == b.val && a.eps == b.eps; }
inline bool operator!=(const Dual& a, const Dual& b) { return !(a == b); }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.val);
  return {e, e * a.eps};
}
inline Dual log(const Dual& a) { return {std::log(a.val), a.eps / a.val}; }
inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.val);
  return {t, (1.0 - t * t) * a.eps};
}
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.val);
  return {s, 0.5 * a.eps / s};
}
inline Dual abs(const Dual& a) { return a.val < 0.0 ? -a : a; }
inline Dual abs2(const Dual& a) { return a * a; }
inline bool isfinite(const Dual& a) { return std::isfinite(a.val) && std::isfinite(a.eps); }

inline std::ostream& operator<<(std::ostream& os, const Dual& d) {
  return os << d.val << "+" << d.eps << "e";
}

/// Primal part of a scalar; identity for double.
inline double primal(double x) { return x; }
inline double primal(const Dual& x) { return x.val; }

}  // namespace vdb

namespace Eigen {
template <>
struct NumTraits<vdb::Dual> : NumTraits<double> {
  using Real = vdb::Dual;
  using NonInteger = vdb::Dual;
  using Nested = vdb::Dual;
  using Literal = vdb::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 3
  };
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<vdb::Dual, double, BinaryOp> {
  using ReturnType = vdb::Dual;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, vdb::Dual, BinaryOp> {
  using ReturnType = vdb::Dual;
};
}  // namespace Eigen

namespace vdb {

/// Lifts a primal matrix with a per-entry tangent.
template <typename A, typename B>
Eigen::Matrix<Dual, Eigen::Dynamic, Eigen::Dynamic> make_dual(const Eigen::MatrixBase<A>& value,
                                                              const Eigen::MatrixBase<B>& tangent) {
  Eigen::Matrix<Dual, Eigen::Dynamic, Eigen::Dynamic> out(value.rows(), value.cols());
  for (Eigen::Index j = 0; j < value.cols(); ++j)
    for (Eigen::Index i = 0; i < value.rows(); ++i) out(i, j) = Dual(value(i, j), tangent(i, j));
  return out;
}

template <typename A>
Eigen::MatrixXd tangent_part(const Eigen::MatrixBase<A>& m) {
  return m.unaryExpr([](const Dual& d) { return d.eps; });
}

template <typename A>
Eigen::MatrixXd primal_part(const Eigen::MatrixBase<A>& m) {
  return m.unaryExpr([](const Dual& d) { return d.val; });
}

}  // namespace vdb
