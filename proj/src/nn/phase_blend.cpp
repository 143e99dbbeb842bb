#include "vdb/nn/phase_blend.hpp"

#include <algorithm>
#include <cmath>

namespace vdb {

PhaseBlendedLinear::PhaseBlendedLinear(const std::string& name, int in, int out, int anchors, InitScheme init,
                                       Rng& rng) {
  if (anchors < 2) throw ConfigError(name + ": phase-blended layer needs at least 2 anchors");
  for (int i = 0; i < anchors; ++i) anchors_.emplace_back(name + ".phase" + std::to_string(i), in, out, init, rng);
}

PhaseSegment PhaseBlendedLinear::segment(double phase) const {
  if (!(phase >= 0.0 && phase <= 1.0)) throw DomainError("phase must lie in [0, 1], got " + std::to_string(phase));
  const int last = anchors() - 1;
  const double pos = phase * last;
  const int lo = std::min(static_cast<int>(std::floor(pos)), last - 1);
  const double t = pos - lo;
  return {lo, 1.0 - t, t};
}

std::vector<double> PhaseBlendedLinear::blend_weights(double phase) const {
  const PhaseSegment s = segment(phase);
  std::vector<double> w(anchors_.size(), 0.0);
  w[static_cast<std::size_t>(s.lo)] = s.w_lo;
  w[static_cast<std::size_t>(s.lo + 1)] += s.w_hi;
  return w;
}

Linear PhaseBlendedLinear::blend(double phase) const {
  const PhaseSegment s = segment(phase);
  const Linear& a = anchors_[static_cast<std::size_t>(s.lo)];
  const Linear& b = anchors_[static_cast<std::size_t>(s.lo + 1)];
  Linear out = a;
  out.weight.value = s.w_lo * a.weight.value + s.w_hi * b.weight.value;
  out.bias.value = s.w_lo * a.bias.value + s.w_hi * b.bias.value;
  out.weight.zero_grad();
  out.bias.zero_grad();
  return out;
}

ParamList PhaseBlendedLinear::parameters() {
  ParamList out;
  for (auto& a : anchors_) append(out, a.parameters());
  return out;
}

ConstParamList PhaseBlendedLinear::parameters() const {
  ConstParamList out;
  for (const auto& a : anchors_) {
    out.push_back(&a.weight);
    out.push_back(&a.bias);
  }
  return out;
}

Matrix PhaseBlendedLinear::forward(const Matrix& x, const Vector& phase) {
  Matrix y = evaluate(x, phase);
  cache_ = std::make_pair(x, phase);
  return y;
}

Matrix PhaseBlendedLinear::backward(const Matrix& dy) {
  if (!cache_) throw StateError("phase-blended linear: backward called without a preceding forward");
  std::vector<Matrix> grads;
  Matrix dx = adjoint(cache_->first, cache_->second, dy, &grads);
  accumulate(parameters(), grads);
  return dx;
}

}  // namespace vdb
