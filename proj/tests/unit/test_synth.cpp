#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vdb/synth/vgan.hpp"

using namespace vdb;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("sample: gaussian mean obeys the CLT bound") {
  Rng rng(1);
  const Matrix x = sample(Distribution2D::gaussian(Vec2::Zero(), 1.0), 1000000, rng);
  CHECK(std::abs(x.col(0).mean()) < 4.0 / 1000.0);
  CHECK(std::abs(x.col(1).mean()) < 4.0 / 1000.0);
}

TEST_CASE("sample: mixture labels are balanced") {
  Rng rng(2);
  const int n = 100000;
  std::vector<int> labels;
  sample(Distribution2D::two_gaussians(), n, rng, &labels);
  const double ones = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  CHECK(std::abs(ones - 0.5 * n) < 4.0 * std::sqrt(0.25 * n));

  sample(Distribution2D::ring(), n, rng, &labels);
  const double p = 1.0 / 8.0;
  for (int c = 0; c < 8; ++c) {
    const double count = static_cast<double>(std::count(labels.begin(), labels.end(), c));
    CHECK(std::abs(count - p * n) < 4.0 * std::sqrt(n * p * (1 - p)));
  }
}

TEST_CASE("sample: deterministic given the seed, validated inputs") {
  Rng a(3), b(3);
  const auto d = Distribution2D::ring();
  CHECK(sample(d, 50, a) == sample(d, 50, b));
  CHECK_THROWS_AS(sample(d, 0, a), ConfigError);
  Distribution2D bad = d;
  bad.components[0].weight = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(Distribution2D::gaussian(Vec2::Zero(), 0.0), ConfigError);
  CHECK_THROWS_AS(parse_distribution("swiss-roll"), ConfigError);
}

TEST_CASE("mode coverage: counts components that own enough samples") {
  Rng rng(4);
  const auto ring = Distribution2D::ring();
  CHECK(mode_coverage(ring, sample(ring, 4000, rng)) == 8);
  const Matrix one = sample(Distribution2D::gaussian(ring.components[3].mean, 0.05), 4000, rng);
  CHECK(mode_coverage(ring, one) == 1);
  const Matrix far = Matrix::Constant(100, 2, 50.0);
  CHECK(mode_coverage(ring, far) == 0);
}

TEST_CASE("discriminator loss with beta fixed at 0 and sigma forced to 0 is the plain GAN loss") {
  Rng rng(5);
  VdbDiscriminatorSpec spec;
  spec.encoder.latent_dim = 4;
  VdbDiscriminator disc(spec, rng);
  disc.encoder().log_var_head().weight.value.setZero();
  disc.encoder().log_var_head().bias.value.setConstant(-80.0);
  const Matrix real = rng.normal_matrix(16, 2), fake = rng.normal_matrix(16, 2);
  DualState dual;
  dual.beta = 0.0;
  const auto r = discriminator_loss(disc, real, fake, dual, rng, nullptr);
  const Vector pr = disc.prob_mean(real), pf = disc.prob_mean(fake);
  const double plain = -pr.array().log().mean() - (1.0 - pf.array()).log().mean();
  CHECK(r.loss == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("discriminator-only: identical classes cannot be separated") {
  const auto d = Distribution2D::gaussian(Vec2::Zero(), 1.0);
  DiscOnlyConfig cfg;
  cfg.steps = 300;
  cfg.eval_samples = 5000;
  cfg.grid_resolution = 11;
  const auto r = train_discriminator_only(d, d, cfg);
  // Two-sided binomial test at n = 10⁴, p > 0.01.
  CHECK(std::abs(r.accuracy - 0.5) < 2.576 * std::sqrt(0.25 / 10000.0));
}

TEST_CASE("discriminator-only: bottleneck caps accuracy and keeps gradients alive between the modes") {
  const auto a = Distribution2D::gaussian(Vec2(-4.0, 0.0), 1.0), b = Distribution2D::gaussian(Vec2(4.0, 0.0), 1.0);
  std::vector<double> acc_free, acc_vdb, band_free, band_vdb;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DiscOnlyConfig cfg;
    cfg.steps = 1000;
    cfg.seed = seed;
    cfg.grid_resolution = 61;
    const auto free = train_discriminator_only(a, b, cfg);
    cfg.ic = 0.1;
    const auto vdb = train_discriminator_only(a, b, cfg);
    acc_free.push_back(free.accuracy);
    acc_vdb.push_back(vdb.accuracy);
    band_free.push_back(free.band_grad_norm);
    band_vdb.push_back(vdb.band_grad_norm);
    CHECK(free.accuracy > 0.99);
  }
  CHECK(median(acc_vdb) < median(acc_free));
  CHECK(median(band_vdb) > median(band_free));
}

TEST_CASE("decision grid: layout and CSV") {
  Rng rng(6);
  VdbDiscriminator disc(VdbDiscriminatorSpec{}, rng);
  const DecisionGrid g = evaluate_grid(disc, 6.0, 121);
  CHECK(g.coords(0) == -6.0);
  CHECK(g.coords(120) == 6.0);
  CHECK(g.coords(60) == doctest::Approx(0.0));
  Matrix pt(1, 2);
  pt << g.coords(7), g.coords(90);
  CHECK(g.prob(90, 7) == doctest::Approx(disc.prob_mean(pt)(0)).epsilon(1e-14));
  std::ostringstream os;
  write_grid_csv(g.coords, g.prob, os);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 121 * 121 + 1);
  CHECK_THROWS_AS(evaluate_grid(disc, 6.0, 1), ConfigError);
}

TEST_CASE("vgan: fixed beta of zero leaves the KL unconstrained") {
  VganConfig cfg;
  cfg.steps = 1500;
  cfg.kl_window = 500;
  cfg.fixed_beta = 0.0;
  const auto r = train_vgan(cfg);
  CHECK(r.trailing_kl > 2.0 * cfg.dual.target_kl);
  for (double b : r.beta_history) CHECK(b == 0.0);
}

TEST_CASE("vgan: adaptive beta stays nonnegative and runs are reproducible") {
  VganConfig cfg;
  cfg.steps = 300;
  cfg.eval_samples = 200;
  cfg.seed = 11;
  const auto a = train_vgan(cfg);
  const auto b = train_vgan(cfg);
  std::ostringstream ca, cb;
  a.metrics.write_csv(ca);
  b.metrics.write_csv(cb);
  CHECK(ca.str() == cb.str());
  CHECK(a.samples == b.samples);
  for (double beta : a.beta_history) CHECK(beta >= 0.0);
  CHECK(a.metrics.size() == 30);
  CHECK(a.kl_history.size() == 300);
}

TEST_CASE("vgan: divergence is reported with seed and step") {
  VganConfig cfg;
  cfg.steps = 50;
  cfg.seed = 9;
  cfg.gen_optimizer.kind = OptimizerKind::sgd_momentum;
  cfg.gen_optimizer.stepsize = 1e300;
  try {
    train_vgan(cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("seed 9") != std::string::npos);
  }
}

TEST_CASE("vgan: config validation names the field") {
  VganConfig cfg;
  cfg.fixed_beta = -1.0;
  CHECK_THROWS_WITH_AS(train_vgan(cfg), doctest::Contains("beta.fixed"), ConfigError);
  cfg = VganConfig{};
  cfg.gp.weight = -0.1;
  CHECK_THROWS_AS(train_vgan(cfg), ConfigError);
}
