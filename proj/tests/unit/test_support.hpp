#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vdb/nn/tensor.hpp"

namespace vdb::test {

inline bool grad_close(double analytic, double numeric, double rtol = 1e-4, double atol = 1e-7) {
  return std::abs(analytic - numeric) <= rtol * std::max(std::abs(analytic), std::abs(numeric)) + atol;
}

/// Central differences of `loss` with respect to every entry of `params`.
inline std::vector<Matrix> numeric_grads(const ParamList& params, const std::function<double()>& loss,
                                         double h = 1e-5) {
  std::vector<Matrix> out;
  for (Tensor* p : params) {
    Matrix g(p->rows(), p->cols());
    for (Eigen::Index j = 0; j < p->cols(); ++j)
      for (Eigen::Index i = 0; i < p->rows(); ++i) {
        const double keep = p->value(i, j);
        p->value(i, j) = keep + h;
        const double up = loss();
        p->value(i, j) = keep - h;
        const double down = loss();
        p->value(i, j) = keep;
        g(i, j) = (up - down) / (2.0 * h);
      }
    out.push_back(g);
  }
  return out;
}

/// Central differences with respect to the entries of a plain matrix.
inline Matrix numeric_grad(Matrix& x, const std::function<double()>& loss, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double keep = x(i, j);
      x(i, j) = keep + h;
      const double up = loss();
      x(i, j) = keep - h;
      const double down = loss();
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * h);
    }
  return g;
}

struct GradMismatch {
  std::size_t count = 0;
  std::string first;
};

inline GradMismatch compare_grads(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric,
                                  double rtol = 1e-4, double atol = 1e-7) {
  GradMismatch m;
  for (std::size_t k = 0; k < analytic.size(); ++k)
    for (Eigen::Index i = 0; i < analytic[k].size(); ++i) {
      const double a = analytic[k](i), n = numeric[k](i);
      if (!grad_close(a, n, rtol, atol)) {
        if (m.count == 0)
          m.first = "tensor " + std::to_string(k) + " entry " + std::to_string(i) + ": analytic " + std::to_string(a) +
                    " numeric " + std::to_string(n);
        ++m.count;
      }
    }
  return m;
}

inline GradMismatch compare_grad(const Matrix& analytic, const Matrix& numeric, double rtol = 1e-4,
                                 double atol = 1e-7) {
  return compare_grads({analytic}, {numeric}, rtol, atol);
}

}  // namespace vdb::test
