#include "vdb/core/encoder.hpp"

namespace vdb {

Encoder::Encoder(const EncoderSpec& spec, Rng& rng, const std::string& name) : spec_(spec) {
  if (spec_.latent_dim < 1) throw ConfigError(name + ".latent_dim must be >= 1");
  if (spec_.input_dim < 1) throw ConfigError(name + ".input_dim must be >= 1");
  int feature_dim = spec_.input_dim;
  if (!spec_.hidden.empty()) {
    MlpSpec trunk;
    trunk.input_dim = spec_.input_dim;
    trunk.hidden.assign(spec_.hidden.begin(), spec_.hidden.end() - 1);
    trunk.output_dim = spec_.hidden.back().width;
    trunk.output_activation = spec_.hidden.back().activation;
    trunk.init = spec_.init;
    trunk_.emplace(trunk, rng, name + ".trunk");
    feature_dim = trunk.output_dim;
  }
  mean_head_ = Linear(name + ".mean", feature_dim, spec_.latent_dim, spec_.init, rng);
  if (spec_.variance == VarianceMode::per_input) {
    log_var_head_ = Linear(name + ".log_var", feature_dim, spec_.latent_dim, spec_.init, rng);
  } else {
    shared_log_var_ = Tensor(name + ".shared_log_var", 1, 1);
  }
}

ParamList Encoder::parameters() {
  ParamList out;
  if (trunk_) append(out, trunk_->parameters());
  append(out, mean_head_.parameters());
  if (spec_.variance == VarianceMode::per_input) {
    append(out, log_var_head_.parameters());
  } else {
    out.push_back(&shared_log_var_);
  }
  return out;
}

ConstParamList Encoder::parameters() const {
  ConstParamList out;
  if (trunk_) {
    auto p = trunk_->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  out.push_back(&mean_head_.weight);
  out.push_back(&mean_head_.bias);
  if (spec_.variance == VarianceMode::per_input) {
    out.push_back(&log_var_head_.weight);
    out.push_back(&log_var_head_.bias);
  } else {
    out.push_back(&shared_log_var_);
  }
  return out;
}

}  // namespace vdb
