#include "vdb/check/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "vdb/core/discriminator.hpp"
#include "vdb/il/vairl.hpp"
#include "vdb/nn/mlp.hpp"
#include "vdb/nn/phase_blend.hpp"
#include "vdb/rl/ppo.hpp"

namespace vdb {

namespace {

constexpr Activation kActivations[] = {Activation::identity, Activation::relu, Activation::tanh, Activation::sigmoid};

class Checker {
 public:
  Checker(std::string name, const GradCheckConfig& cfg) : cfg_(cfg) { c_.name = std::move(name); }

  void compare(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric) {
    if (analytic.size() != numeric.size()) {
      note("gradient count " + std::to_string(analytic.size()) + " vs " + std::to_string(numeric.size()));
      ++c_.mismatches;
      return;
    }
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      if (analytic[k].rows() != numeric[k].rows() || analytic[k].cols() != numeric[k].cols()) {
        note("shape mismatch in tensor " + std::to_string(k));
        ++c_.mismatches;
        continue;
      }
      for (Eigen::Index i = 0; i < analytic[k].size(); ++i) {
        const double a = analytic[k](i), n = numeric[k](i);
        const double scale = std::max(std::abs(a), std::abs(n));
        const double err = std::abs(a - n);
        ++c_.entries;
        if (scale > cfg_.atol) c_.max_rel_error = std::max(c_.max_rel_error, err / scale);
        if (!(err <= cfg_.rtol * scale + cfg_.atol)) {
          ++c_.mismatches;
          char buf[160];
          std::snprintf(buf, sizeof buf, "config %d tensor %zu entry %ld: analytic %.10g numeric %.10g", config_, k,
                        static_cast<long>(i), a, n);
          note(buf);
        }
      }
    }
  }

  void next_config() {
    ++config_;
    ++c_.configs;
  }
  GradCheckCase result() const { return c_; }

 private:
  void note(const std::string& s) {
    if (c_.first_failure.empty()) c_.first_failure = s;
  }

  const GradCheckConfig& cfg_;
  GradCheckCase c_;
  int config_ = 0;
};

int dim(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1))); }

Activation any_activation(Rng& rng) { return kActivations[rng.index(4)]; }
Activation smooth_activation(Rng& rng) { return kActivations[2 + rng.index(2)]; }

std::vector<LayerSpec> random_hidden(Rng& rng, bool smooth) {
  std::vector<LayerSpec> h;
  const int layers = dim(rng, 1, 2);
  for (int l = 0; l < layers; ++l) h.push_back({dim(rng, 2, 5), smooth ? smooth_activation(rng) : any_activation(rng)});
  return h;
}

EncoderSpec random_encoder(Rng& rng, int input_dim) {
  EncoderSpec e;
  e.input_dim = input_dim;
  e.hidden = random_hidden(rng, true);
  e.latent_dim = dim(rng, 1, 4);
  e.variance = rng.uniform() < 0.25 ? VarianceMode::shared : VarianceMode::per_input;
  return e;
}

// Weighted sum so every output entry carries a distinct upstream gradient.
double weighted(const Matrix& y, const Matrix& w) { return y.cwiseProduct(w).sum(); }

GradCheckCase check_linear(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("linear", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("linear", static_cast<std::uint64_t>(i));
    Linear layer("lin", dim(r, 1, 5), dim(r, 1, 5), InitScheme::uniform_fan_in, r);
    Matrix x = r.normal_matrix(dim(r, 1, 4), layer.in_dim());
    const Matrix w = r.normal_matrix(x.rows(), layer.out_dim());
    std::vector<Matrix> g;
    const Matrix dx = layer.adjoint<double>(x, w, &g);
    const auto loss = [&] { return weighted(layer.evaluate<double>(x), w); };
    c.compare(g, central_differences(layer.parameters(), loss, cfg.step));
    c.compare({dx}, {central_differences(x, loss, cfg.step)});
  }
  return c.result();
}

GradCheckCase check_mlp(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("mlp", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("mlp", static_cast<std::uint64_t>(i));
    MlpSpec spec;
    spec.input_dim = dim(r, 1, 4);
    spec.hidden = random_hidden(r, false);
    spec.output_dim = dim(r, 1, 3);
    spec.output_activation = any_activation(r);
    Mlp net(spec, r, "net");
    Matrix x = r.normal_matrix(dim(r, 1, 4), spec.input_dim);
    const Matrix w = r.normal_matrix(x.rows(), spec.output_dim);
    MlpTrace<double> trace;
    net.evaluate<double>(x, &trace);
    std::vector<Matrix> g;
    const Matrix dx = net.adjoint<double>(trace, w, &g);
    const auto loss = [&] { return weighted(net.evaluate<double>(x), w); };
    c.compare(g, central_differences(net.parameters(), loss, cfg.step));
    c.compare({dx}, {central_differences(x, loss, cfg.step)});
  }
  return c.result();
}

GradCheckCase check_phase_blend(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("phase_blended_linear", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("phase", static_cast<std::uint64_t>(i));
    PhaseBlendedLinear layer("pb", dim(r, 1, 4), dim(r, 1, 3), dim(r, 2, 5), InitScheme::uniform_fan_in, r);
    Matrix x = r.normal_matrix(dim(r, 1, 5), layer.in_dim());
    Vector phase(x.rows());
    for (Eigen::Index n = 0; n < phase.size(); ++n) phase(n) = r.uniform();
    const Matrix w = r.normal_matrix(x.rows(), layer.out_dim());
    std::vector<Matrix> g;
    const Matrix dx = layer.adjoint<double>(x, phase, w, &g);
    const auto loss = [&] { return weighted(layer.evaluate<double>(x, phase), w); };
    c.compare(g, central_differences(layer.parameters(), loss, cfg.step));
    c.compare({dx}, {central_differences(x, loss, cfg.step)});
  }
  return c.result();
}

GradCheckCase check_encoder(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("encoder", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("encoder", static_cast<std::uint64_t>(i));
    const EncoderSpec spec = random_encoder(r, dim(r, 1, 3));
    Encoder enc(spec, r, "enc");
    Matrix x = r.normal_matrix(dim(r, 1, 4), spec.input_dim);
    const Matrix noise = r.normal_matrix(x.rows(), spec.latent_dim);
    const Matrix wz = r.normal_matrix(x.rows(), spec.latent_dim), wv = r.normal_matrix(x.rows(), spec.latent_dim);
    const auto loss = [&] {
      const EncoderOutput o = enc.evaluate<double>(x, &noise);
      return weighted(o.sample, wz) + weighted(o.log_var, wv);
    };
    EncoderTrace<double> trace;
    const EncoderOutput o = enc.evaluate<double>(x, &noise, &trace);
    Matrix d_mean = Matrix::Zero(x.rows(), spec.latent_dim), d_log_var = wv;
    Encoder::reparam_adjoint<double>(o, noise, wz, d_mean, d_log_var);
    std::vector<Matrix> g;
    const Matrix dx = enc.adjoint<double>(trace, d_mean, d_log_var, &g);
    c.compare(g, central_differences(enc.parameters(), loss, cfg.step));
    c.compare({dx}, {central_differences(x, loss, cfg.step)});
  }
  return c.result();
}

VdbDiscriminator random_disc(Rng& r, int input_dim) {
  VdbDiscriminatorSpec spec;
  spec.encoder = random_encoder(r, input_dim);
  spec.bottleneck = r.uniform() < 0.8;
  return VdbDiscriminator(spec, r, "disc");
}

GradCheckCase check_disc_loss(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("vdb_discriminator_loss", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("disc_loss", static_cast<std::uint64_t>(i));
    VdbDiscriminator d = random_disc(r, dim(r, 1, 3));
    const Eigen::Index n = dim(r, 1, 4);
    const Matrix real = r.normal_matrix(n, d.input_dim()), fake = r.normal_matrix(n, d.input_dim());
    const Matrix nr = r.normal_matrix(real.rows(), d.latent_dim()), nf = r.normal_matrix(fake.rows(), d.latent_dim());
    DualState dual;
    dual.beta = r.uniform(0.0, 2.0);
    dual.target_kl = r.uniform(0.1, 1.0);
    std::vector<Matrix> g;
    discriminator_loss(d, real, fake, dual, nr, nf, &g);
    const auto loss = [&] { return discriminator_loss(d, real, fake, dual, nr, nf, nullptr).loss; };
    c.compare(g, central_differences(d.parameters(), loss, cfg.step));
  }
  return c.result();
}

GradCheckCase check_generator_loss(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("generator_loss", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("gen_loss", static_cast<std::uint64_t>(i));
    VdbDiscriminator d = random_disc(r, dim(r, 1, 3));
    Matrix fake = r.normal_matrix(dim(r, 1, 5), d.input_dim());
    const GeneratorLossResult res = generator_loss(d, fake, true);
    const auto loss = [&] { return generator_loss(d, fake, false).value; };
    c.compare({res.input_grad}, {central_differences(fake, loss, cfg.step)});
  }
  return c.result();
}

GradCheckCase check_gradient_penalty(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("gradient_penalty", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("gp", static_cast<std::uint64_t>(i));
    VdbDiscriminator d = random_disc(r, dim(r, 1, 3));
    const Matrix real = r.normal_matrix(dim(r, 1, 4), d.input_dim());
    const Matrix noise = r.normal_matrix(real.rows(), d.latent_dim());
    const GpConfig gp{r.uniform(0.05, 2.0)};
    std::vector<Matrix> g;
    gradient_penalty(d, real, noise, gp, &g);
    const auto loss = [&] { return gradient_penalty(d, real, noise, gp, nullptr).value; };
    c.compare(g, central_differences(d.parameters(), loss, cfg.step));
  }
  return c.result();
}

GradCheckCase check_ppo_surrogate(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("ppo_surrogate", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("ppo", static_cast<std::uint64_t>(i));
    PolicySpec spec;
    spec.hidden = random_hidden(r, true);
    spec.initial_log_std = r.uniform(-1.0, 0.5);
    GaussianPolicy p(spec, r);
    const Eigen::Index n = dim(r, 2, 8);
    const Matrix obs = r.normal_matrix(n, 2), act = r.normal_matrix(n, 2);
    Vector old = p.log_prob(obs, act);
    Vector adv(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      old(k) += 0.3 * r.normal();
      adv(k) = r.normal();
    }
    std::vector<Matrix> g;
    ppo_surrogate(p, obs, act, old, adv, 0.2, &g);
    const auto loss = [&] { return ppo_surrogate(p, obs, act, old, adv, 0.2, nullptr).value; };
    c.compare(g, central_differences(p.parameters(), loss, cfg.step));
  }
  return c.result();
}

VairlDiscriminator random_vairl(Rng& r) {
  VairlSpec spec;
  spec.encoder = random_encoder(r, 2);
  spec.bottleneck = r.uniform() < 0.8;
  spec.gamma = r.uniform(0.0, 1.0);
  return VairlDiscriminator(spec, r, "vairl");
}

GradCheckCase check_vairl_f(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("vairl_f", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("vairl_f", static_cast<std::uint64_t>(i));
    VairlDiscriminator d = random_vairl(r);
    const Eigen::Index n = dim(r, 1, 4);
    Matrix s = r.normal_matrix(n, 2), sn = r.normal_matrix(n, 2);
    const VairlNoise z = draw_vairl_noise(n, d.latent_dim(), r);
    const Vector w = r.normal_matrix(n, 1).col(0);
    VairlTrace<double> tr;
    d.f<double>(s, sn, &z, &tr);
    std::vector<Matrix> g;
    const auto [ds, dsn] = d.f_adjoint<double>(tr, w, &g);
    const auto loss = [&] { return w.dot(d.f<double>(s, sn, &z, nullptr)); };
    c.compare(g, central_differences(d.parameters(), loss, cfg.step));
    c.compare({ds, dsn}, {central_differences(s, loss, cfg.step), central_differences(sn, loss, cfg.step)});
  }
  return c.result();
}

GradCheckCase check_vairl_loss(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("vairl_loss", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("vairl_loss", static_cast<std::uint64_t>(i));
    VairlDiscriminator d = random_vairl(r);
    const Eigen::Index ne = dim(r, 1, 4), na = dim(r, 1, 4);
    const VairlBatch e{r.normal_matrix(ne, 2), r.normal_matrix(ne, 2), r.normal_matrix(ne, 1).col(0)};
    const VairlBatch a{r.normal_matrix(na, 2), r.normal_matrix(na, 2), r.normal_matrix(na, 1).col(0)};
    const VairlNoise z = draw_vairl_noise(ne + na, d.latent_dim(), r);
    DualState dual;
    dual.beta = r.uniform(0.0, 2.0);
    dual.target_kl = r.uniform(0.1, 1.0);
    std::vector<Matrix> g;
    vairl_loss(d, e, a, dual, z, &g);
    const auto loss = [&] { return vairl_loss(d, e, a, dual, z, nullptr).loss; };
    c.compare(g, central_differences(d.parameters(), loss, cfg.step));
  }
  return c.result();
}

GradCheckCase check_vairl_gp(const GradCheckConfig& cfg, Rng& rng) {
  Checker c("vairl_gradient_penalty", cfg);
  for (int i = 0; i < cfg.configs; ++i) {
    c.next_config();
    Rng r = rng.split("vairl_gp", static_cast<std::uint64_t>(i));
    VairlDiscriminator d = random_vairl(r);
    const Eigen::Index n = dim(r, 1, 4);
    const Matrix s = r.normal_matrix(n, 2), sn = r.normal_matrix(n, 2);
    const VairlNoise z = draw_vairl_noise(n, d.latent_dim(), r);
    const GpConfig gp{r.uniform(0.05, 2.0)};
    std::vector<Matrix> g;
    vairl_gradient_penalty(d, s, sn, z, gp, &g);
    const auto loss = [&] { return vairl_gradient_penalty(d, s, sn, z, gp, nullptr).value; };
    c.compare(g, central_differences(d.parameters(), loss, cfg.step));
  }
  return c.result();
}

}  // namespace

void GradCheckConfig::validate() const {
  if (configs < 1) throw ConfigError("gradcheck.configs must be at least 1");
  if (!(rtol > 0.0)) throw ConfigError("gradcheck.rtol must be positive");
  if (!(atol >= 0.0)) throw ConfigError("gradcheck.atol must be >= 0");
  if (!(step > 0.0)) throw ConfigError("gradcheck.step must be positive");
}

bool GradCheckReport::passed() const {
  return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const GradCheckCase& c) { return c.passed(); });
}

std::vector<Matrix> central_differences(const ParamList& params, const std::function<double()>& loss, double step) {
  std::vector<Matrix> out;
  for (Tensor* p : params) out.push_back(central_differences(p->value, loss, step));
  return out;
}

Matrix central_differences(Matrix& x, const std::function<double()>& loss, double step) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + step;
    const double up = loss();
    x(i) = keep - step;
    const double down = loss();
    x(i) = keep;
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

GradCheckReport run_gradchecks(const GradCheckConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng rng = root.split("gradcheck");
  GradCheckReport r;
  for (auto* check : {check_linear, check_mlp, check_phase_blend, check_encoder, check_disc_loss, check_generator_loss,
                      check_gradient_penalty, check_ppo_surrogate, check_vairl_f, check_vairl_loss, check_vairl_gp})
    r.cases.push_back(check(cfg, rng));
  return r;
}

void write_gradcheck_csv(const GradCheckReport& report, std::ostream& os) {
  os << "name,configs,entries,mismatches,max_rel_error,passed\n";
  char buf[64];
  for (const GradCheckCase& c : report.cases) {
    std::snprintf(buf, sizeof buf, "%.6g", c.max_rel_error);
    os << c.name << ',' << c.configs << ',' << c.entries << ',' << c.mismatches << ',' << buf << ','
       << (c.passed() ? 1 : 0) << '\n';
  }
}

}  // namespace vdb
