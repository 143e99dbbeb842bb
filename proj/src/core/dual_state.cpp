#include "vdb/core/dual_state.hpp"

#include <algorithm>
#include <cmath>

#include "vdb/nn/types.hpp"

namespace vdb {

void DualState::validate() const {
  if (!(target_kl > 0.0)) throw ConfigError("dual.target_kl (I_c) must be > 0");
  if (!(stepsize > 0.0)) throw ConfigError("dual.stepsize (alpha_beta) must be > 0");
  if (!(beta >= 0.0)) throw ConfigError("dual.beta must be >= 0");
}

DualState dual_update(DualState dual, double batch_kl) {
  dual.beta = std::max(0.0, dual.beta + dual.stepsize * (batch_kl - dual.target_kl));
  if (dual.ema_started) {
    dual.running_kl = dual.ema_decay * dual.running_kl + (1.0 - dual.ema_decay) * batch_kl;
  } else {
    dual.running_kl = batch_kl;
    dual.ema_started = true;
  }
  return dual;
}

}  // namespace vdb
