#include "vdb/nn/linear.hpp"

#include <cmath>

namespace vdb {

Linear::Linear(const std::string& name, int in, int out, InitScheme init, Rng& rng)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {
  if (in < 1 || out < 1) throw ConfigError(name + ": layer widths must be >= 1");
  const double fan_in = static_cast<double>(in);
  switch (init) {
    case InitScheme::uniform_fan_in: {
      const double bound = 1.0 / std::sqrt(fan_in);
      weight.value = weight.value.unaryExpr([&](double) { return rng.uniform(-bound, bound); });
      bias.value = bias.value.unaryExpr([&](double) { return rng.uniform(-bound, bound); });
      break;
    }
    case InitScheme::normal_scaled: {
      const double sd = 1.0 / std::sqrt(fan_in);
      weight.value = weight.value.unaryExpr([&](double) { return sd * rng.normal(); });
      break;
    }
  }
}

}  // namespace vdb
