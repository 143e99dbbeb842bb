#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vdb/core/discriminator.hpp"
#include "vdb/core/kl.hpp"
#include "vdb/nn/optimizer.hpp"
#include "vdb/rl/expert.hpp"

namespace vdb {

struct VairlSpec {
  EncoderSpec encoder{2, {{32, Activation::relu}}, 32, VarianceMode::per_input, InitScheme::uniform_fan_in};
  /// false: z = μ in every branch and no KL term (plain AIRL).
  bool bottleneck = true;
  double gamma = 0.99;
};

/// Reparameterization noise for the three branches z_g(s), z_h(s), z_h(s').
struct VairlNoise {
  Matrix g, h, h_next;
};

template <typename T>
struct VairlTrace {
  EncoderTrace<T> g, h, h_next;
  EncoderOutputT<T> eg, eh, eh_next;
};

/// Factored discriminator f(s, s') = D_g(z_g) + γ D_h(z_h') − D_h(z_h), with
/// z_g ~ E_g(·|s), z_h ~ E_h(·|s), z_h' ~ E_h(·|s'). The same h-encoder and
/// head serve s and s'. Heads are linear with no squashing.
class VairlDiscriminator {
 public:
  VairlDiscriminator() = default;
  VairlDiscriminator(const VairlSpec& spec, Rng& rng, const std::string& name = "vairl");

  const VairlSpec& spec() const { return spec_; }
  bool bottleneck() const { return spec_.bottleneck; }
  int latent_dim() const { return g_enc_.latent_dim(); }
  Encoder& g_encoder() { return g_enc_; }
  const Encoder& g_encoder() const { return g_enc_; }
  Encoder& h_encoder() { return h_enc_; }
  const Encoder& h_encoder() const { return h_enc_; }
  Linear& g_head() { return g_head_; }
  const Linear& g_head() const { return g_head_; }
  Linear& h_head() { return h_head_; }
  const Linear& h_head() const { return h_head_; }

  /// E_g, D_g, E_h, D_h, in that order.
  ParamList parameters();
  ConstParamList parameters() const;

  /// f per row. Noise is ignored without the bottleneck; null noise means z = μ.
  template <typename T>
  VectorX<T> f(const MatrixX<T>& s, const MatrixX<T>& s_next, const VairlNoise* noise, VairlTrace<T>* trace) const {
    require_shape(s.rows() == s_next.rows(), "vairl: s and s' batch sizes differ");
    const bool use_noise = noise && spec_.bottleneck;
    VairlTrace<T> local;
    VairlTrace<T>& tr = trace ? *trace : local;
    tr.eg = g_enc_.evaluate(s, use_noise ? &noise->g : nullptr, &tr.g);
    tr.eh = h_enc_.evaluate(s, use_noise ? &noise->h : nullptr, &tr.h);
    tr.eh_next = h_enc_.evaluate(s_next, use_noise ? &noise->h_next : nullptr, &tr.h_next);
    const MatrixX<T> g = g_head_.evaluate(tr.eg.sample);
    const MatrixX<T> h = h_head_.evaluate(tr.eh.sample);
    const MatrixX<T> h_next = h_head_.evaluate(tr.eh_next.sample);
    return (g.col(0) + T(spec_.gamma) * h_next.col(0) - h.col(0)).eval();
  }

  /// Backpropagates ∂L/∂f per row, plus kl_weight · Σ_branches KL per row when
  /// the bottleneck is on. Appends parameter gradients in parameters() order
  /// and returns {∂L/∂s, ∂L/∂s'}.
  template <typename T>
  std::pair<MatrixX<T>, MatrixX<T>> f_adjoint(const VairlTrace<T>& tr, const VectorX<T>& d_f,
                                              std::vector<MatrixX<T>>* grads, double kl_weight = 0.0) const {
    const Eigen::Index n = d_f.size();
    const MatrixX<T> dg = d_f;
    const MatrixX<T> dh_next = T(spec_.gamma) * d_f;
    const MatrixX<T> dh = -d_f;
    std::vector<MatrixX<T>> gh, hh1, hh2, ge, he1, he2;
    const MatrixX<T> dzg = g_head_.adjoint(tr.eg.sample, dg, grads ? &gh : nullptr);
    const MatrixX<T> dzh = h_head_.adjoint(tr.eh.sample, dh, grads ? &hh1 : nullptr);
    const MatrixX<T> dzh_next = h_head_.adjoint(tr.eh_next.sample, dh_next, grads ? &hh2 : nullptr);
    const MatrixX<T> ds_g = branch_adjoint(g_enc_, tr.g, tr.eg, dzg, kl_weight, grads ? &ge : nullptr);
    const MatrixX<T> ds_h = branch_adjoint(h_enc_, tr.h, tr.eh, dzh, kl_weight, grads ? &he1 : nullptr);
    const MatrixX<T> ds_next = branch_adjoint(h_enc_, tr.h_next, tr.eh_next, dzh_next, kl_weight, grads ? &he2 : nullptr);
    if (grads) {
      for (auto& m : ge) grads->push_back(std::move(m));
      for (auto& m : gh) grads->push_back(std::move(m));
      for (std::size_t i = 0; i < he1.size(); ++i) grads->push_back(he1[i] + he2[i]);
      for (std::size_t i = 0; i < hh1.size(); ++i) grads->push_back(hh1[i] + hh2[i]);
    }
    require_shape(ds_g.rows() == n, "vairl: adjoint batch mismatch");
    return {(ds_g + ds_h).eval(), ds_next};
  }

 private:
  template <typename T>
  MatrixX<T> branch_adjoint(const Encoder& enc, const EncoderTrace<T>& trace, const EncoderOutputT<T>& out,
                            const MatrixX<T>& dz, double kl_weight, std::vector<MatrixX<T>>* grads) const {
    MatrixX<T> d_mean = MatrixX<T>::Zero(dz.rows(), dz.cols());
    MatrixX<T> d_log_var = MatrixX<T>::Zero(dz.rows(), dz.cols());
    if (spec_.bottleneck && trace.noise) {
      Encoder::reparam_adjoint(out, *trace.noise, dz, d_mean, d_log_var);
    } else {
      d_mean += dz;
    }
    if (spec_.bottleneck && kl_weight != 0.0) {
      using std::exp;
      const T w(kl_weight);
      d_mean += w * out.mean;
      for (Eigen::Index j = 0; j < d_log_var.cols(); ++j)
        for (Eigen::Index i = 0; i < d_log_var.rows(); ++i)
          d_log_var(i, j) += T(0.5) * w * (exp(out.log_var(i, j)) - T(1.0));
    }
    return enc.adjoint(trace, d_mean, d_log_var, grads);
  }

  VairlSpec spec_;
  Encoder g_enc_;
  Linear g_head_;
  Encoder h_enc_;
  Linear h_head_;
};

/// Fresh standard-normal noise for a batch of n rows.
VairlNoise draw_vairl_noise(Eigen::Index n, int latent_dim, Rng& rng);

/// f per row; `sample` draws z by reparameterization, otherwise z = μ.
Vector vairl_f(const VairlDiscriminator& disc, const Matrix& s, const Matrix& s_next, bool sample, Rng& rng);

/// D = exp f / (exp f + π(a|s)) = sigmoid(f − log π), evaluated in log space.
double airl_prob(double f, double log_pi);
/// Mean-path D per row.
Vector vairl_disc_prob(const VairlDiscriminator& disc, const Matrix& s, const Matrix& s_next, const Vector& log_pi);

/// Transitions with the current policy's log π(a|s).
struct VairlBatch {
  Matrix s;
  Matrix s_next;
  Vector log_pi;
};

struct VairlLossResult {
  double loss = 0.0;        ///< bce_expert + bce_agent + β (batch_kl − I_c)
  double bce_expert = 0.0;  ///< mean −log D on expert transitions
  double bce_agent = 0.0;   ///< mean −log(1 − D) on agent transitions
  double batch_kl = 0.0;    ///< mean over the pooled batch of KL_g(s) + KL_h(s) + KL_h(s')
  double kl_g = 0.0;
  double kl_h = 0.0;
  double kl_h_next = 0.0;
  double accuracy = 0.0;    ///< from sampled z
};

/// AIRL discriminator loss with the information constraint on the summed
/// branch KL. Rows of `noise` cover expert rows first, then agent rows.
VairlLossResult vairl_loss(const VairlDiscriminator& disc, const VairlBatch& expert, const VairlBatch& agent,
                           const DualState& dual, const VairlNoise& noise, std::vector<Matrix>* grads);

/// w_GP · mean ½(‖∇_s f‖² + ‖∇_s' f‖²) on expert transitions, through the
/// reparameterized encoders.
GradientPenaltyResult vairl_gradient_penalty(const VairlDiscriminator& disc, const Matrix& s, const Matrix& s_next,
                                             const VairlNoise& noise, const GpConfig& gp, std::vector<Matrix>* grads);

/// Frozen g-branch: r(s) = D_g(μ_g(s)).
class RecoveredReward {
 public:
  RecoveredReward() = default;
  explicit RecoveredReward(const VairlDiscriminator& disc);
  RecoveredReward(const EncoderSpec& spec, Rng& rng);

  const EncoderSpec& spec() const { return encoder_.spec(); }
  Encoder& encoder() { return encoder_; }
  Linear& head() { return head_; }
  ParamList parameters();
  ConstParamList parameters() const;

  Vector operator()(const Matrix& states) const;

  /// "vdb-reward 1", the encoder layout, then a checkpoint of the weights.
  void save(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;
  static RecoveredReward load(std::istream& is);
  static RecoveredReward load(const std::filesystem::path& path);

 private:
  Encoder encoder_;
  Linear head_;
};

/// Recovered reward on a grid over the maze box, long format x,y,value.
void write_reward_grid_csv(const RecoveredReward& reward, const MazeSpec& spec, int resolution, std::ostream& os);

enum class BetaMode { adaptive, fixed_zero };
BetaMode parse_beta_mode(const std::string& name);
std::string to_string(BetaMode mode);

struct VairlConfig {
  PolicySpec policy;
  PpoConfig ppo;
  VairlSpec disc;
  double ic = 0.5;
  BetaMode beta_mode = BetaMode::adaptive;
  double dual_stepsize = 1e-3;
  GpConfig gp;
  OptimizerConfig disc_optimizer{OptimizerKind::adam, 5e-5};
  int iterations = 100;
  int steps_per_iteration = 2000;
  int disc_steps = 100;  ///< discriminator updates per policy update
  int disc_batch = 32;   ///< transitions per class in each discriminator update
  std::uint64_t seed = 0;

  void validate() const;
};

struct VairlResult {
  PpoAgent agent;
  VairlDiscriminator disc;
  RecoveredReward reward;
  DualState dual;
  MetricsLog metrics;  ///< ppo_metric_columns() then disc_loss, batch_kl, kl_g, kl_h, kl_h_next, beta, accuracy, gp
  ReturnStats evaluation;
};

/// AIRL-style alternation: rollouts rewarded by f at the encoder means, a PPO
/// update, then `disc_steps` discriminator updates with the dual update on β.
VairlResult vairl_train(const Demonstrations& demos, const MazeSpec& spec, const VairlConfig& cfg);

struct TransferConfig {
  PolicySpec policy;
  PpoConfig ppo;
  int iterations = 100;
  int steps_per_iteration = 2000;
  int eval_episodes = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TransferResult {
  PpoAgent agent;
  MetricsLog metrics;
  ReturnStats evaluation;  ///< ground-truth reward, deterministic policy
};

/// Trains a fresh policy on `test_spec` with r(s, a, s') = g(s') as its only
/// reward, then evaluates it with the ground-truth reward.
TransferResult transfer(const RecoveredReward& reward, const MazeSpec& test_spec, const TransferConfig& cfg);

}  // namespace vdb
