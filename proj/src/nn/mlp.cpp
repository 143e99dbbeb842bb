#include "vdb/nn/mlp.hpp"

namespace vdb {

void MlpSpec::validate() const {
  if (input_dim < 1) throw ConfigError("mlp.input_dim must be >= 1");
  if (output_dim < 1) throw ConfigError("mlp.output_dim must be >= 1");
  for (std::size_t i = 0; i < hidden.size(); ++i)
    if (hidden[i].width < 1) throw ConfigError("mlp.hidden[" + std::to_string(i) + "].width must be >= 1");
}

Mlp::Mlp(const MlpSpec& spec, Rng& rng, const std::string& name) : spec_(spec), name_(name) {
  spec_.validate();
  int in = spec_.input_dim;
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    layers_.emplace_back(name_ + ".l" + std::to_string(i), in, spec_.hidden[i].width, spec_.init, rng);
    activations_.push_back(spec_.hidden[i].activation);
    in = spec_.hidden[i].width;
  }
  layers_.emplace_back(name_ + ".out", in, spec_.output_dim, spec_.init, rng);
  activations_.push_back(spec_.output_activation);
}

ParamList Mlp::parameters() {
  ParamList out;
  for (auto& l : layers_) append(out, l.parameters());
  return out;
}

ConstParamList Mlp::parameters() const {
  ConstParamList out;
  for (const auto& l : layers_) {
    auto p = l.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Matrix Mlp::forward(const Matrix& x) {
  MlpTrace<double> trace;
  Matrix y = evaluate(x, &trace);
  cache_ = std::move(trace);
  return y;
}

Matrix Mlp::backward(const Matrix& dy) {
  if (!cache_) throw StateError(name_ + ": backward called without a preceding forward");
  std::vector<Matrix> grads;
  Matrix dx = adjoint(*cache_, dy, &grads);
  accumulate(parameters(), grads);
  return dx;
}

}  // namespace vdb
