#include "vdb/nn/optimizer.hpp"

#include <cmath>
#include <sstream>

namespace vdb {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd-momentum" || name == "sgd") return OptimizerKind::sgd_momentum;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd_momentum:
      return "sgd-momentum";
    case OptimizerKind::rmsprop:
      return "rmsprop";
    case OptimizerKind::adam:
      return "adam";
  }
  return "adam";
}

double grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const Tensor* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

Optimizer::Optimizer(const OptimizerConfig& config, ParamList params) : config_(config), params_(std::move(params)) {
  if (!(config_.stepsize > 0.0)) throw ConfigError("optimizer.stepsize must be > 0");
  for (const Tensor* p : params_) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void Optimizer::rebind(ParamList params) {
  if (params.size() != params_.size()) throw DimensionError("optimizer: rebind with a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->rows() != m_[i].rows() || params[i]->cols() != m_[i].cols())
      throw DimensionError("optimizer: rebind shape mismatch for '" + params[i]->name + "'");
  params_ = std::move(params);
}

namespace {

[[noreturn]] void report_non_finite(const Tensor& p, const Matrix& m, const char* what, long step) {
  std::ostringstream os;
  os << "non-finite " << what << " in tensor '" << p.name << "' (" << p.rows() << "x" << p.cols() << ") at optimizer step "
     << step << ":";
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j))) {
        os << " [" << i << "," << j << "]=" << m(i, j);
      }
  os << "; grad norm " << p.grad.norm() << ", value norm " << p.value.norm();
  throw DivergenceError(os.str());
}

}  // namespace

void Optimizer::step() {
  for (const Tensor* p : params_)
    if (!p->grad.allFinite()) report_non_finite(*p, p->grad, "gradient", steps_);

  double clip = 1.0;
  if (config_.max_grad_norm > 0.0) {
    const double norm = grad_norm(params_);
    if (norm > config_.max_grad_norm) clip = config_.max_grad_norm / norm;
  }

  ++steps_;
  const double lr = config_.stepsize;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    const Matrix g = clip * p.grad;
    switch (config_.kind) {
      case OptimizerKind::sgd_momentum:
        m_[i] = config_.momentum * m_[i] + g;
        p.value -= lr * m_[i];
        break;
      case OptimizerKind::rmsprop:
        v_[i] = config_.decay * v_[i] + (1.0 - config_.decay) * g.cwiseAbs2();
        p.value.array() -= lr * g.array() / (v_[i].array().sqrt() + config_.epsilon);
        break;
      case OptimizerKind::adam: {
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
        p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
        break;
      }
    }
    if (!p.value.allFinite()) report_non_finite(p, p.value, "value", steps_);
  }
}

}  // namespace vdb
