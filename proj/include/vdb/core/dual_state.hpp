#pragma once

namespace vdb {

/// Lagrange multiplier for the information constraint E[KL] ≤ I_c.
struct DualState {
  double beta = 0.0;
  double target_kl = 0.5;   ///< I_c, nats
  double stepsize = 1e-5;   ///< α_β
  double running_kl = 0.0;  ///< EMA of batch KL, logging only
  double ema_decay = 0.99;
  bool ema_started = false;

  /// Throws ConfigError unless I_c > 0, α_β > 0 and β ≥ 0.
  void validate() const;
};

/// Dual gradient ascent on β: β' = max(0, β + α_β (batch_kl − I_c)).
/// The raw batch KL drives the update; running_kl only tracks it.
DualState dual_update(DualState dual, double batch_kl);

}  // namespace vdb
