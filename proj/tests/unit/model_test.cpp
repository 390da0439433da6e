#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "ilvm/model.hpp"
#include "ilvm/ops.hpp"
#include "ilvm/optim.hpp"

namespace {

using namespace ilvm;
namespace support = ilvm::testing;
using ad::Tensor;
using model::IlvmModel;
using model::ModelConfig;

std::vector<Scene> random_scenes(Rng& rng, std::size_t count, const ModelConfig& cfg, std::uint64_t first_id = 1) {
  std::vector<Scene> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(support::random_scene(rng, 2 + k % 3, cfg.history, cfg.horizon, first_id + k));
  return out;
}

void expect_same_samples(const SceneSampleSet& a, const SceneSampleSet& b) {
  ASSERT_EQ(a.xy.size(), b.xy.size());
  for (std::size_t i = 0; i < a.xy.size(); ++i) ASSERT_EQ(a.xy[i], b.xy[i]) << "at " << i;
}

double max_track_diff(const SceneSampleSet& set, std::size_t s0, std::size_t s1, std::size_t n) {
  double d = 0.0;
  for (std::size_t t = 0; t < set.horizon; ++t) d = std::max(d, geo::norm(set.local(s0, n, t) - set.local(s1, n, t)));
  return d;
}

TEST(BetaSchedule, CyclicWarmupThenConstant) {
  ModelConfig cfg;
  cfg.beta_max = 0.05;
  cfg.beta_warmup = 2000;
  cfg.beta_cycle = 500;
  EXPECT_EQ(model::beta_schedule(cfg, 0), 0.0);
  EXPECT_NEAR(model::beta_schedule(cfg, 125), 0.025, 1e-15);
  EXPECT_NEAR(model::beta_schedule(cfg, 250), 0.05, 1e-15);
  EXPECT_NEAR(model::beta_schedule(cfg, 499), 0.05, 1e-15);
  EXPECT_EQ(model::beta_schedule(cfg, 500), 0.0);
  EXPECT_NEAR(model::beta_schedule(cfg, 1625), 0.025, 1e-15);
  EXPECT_EQ(model::beta_schedule(cfg, 2000), 0.05);
  EXPECT_EQ(model::beta_schedule(cfg, 1'000'000), 0.05);
  EXPECT_THROW(model::beta_schedule(cfg, -1), std::invalid_argument);
}

TEST(Config, AblationFlags) {
  const ModelConfig base;
  struct Row {
    bool prior, implicit, enc, dec;
  };
  const Row rows[] = {{true, true, true, true},  {true, false, true, true}, {false, true, true, true},
                      {true, true, false, true}, {true, true, true, false}, {true, true, false, false}};
  for (int k = 0; k < 6; ++k) {
    const auto c = model::with_ablation(base, k);
    EXPECT_EQ(c.learned_prior, rows[k].prior);
    EXPECT_EQ(c.implicit_output, rows[k].implicit);
    EXPECT_EQ(c.sim_encoder, rows[k].enc);
    EXPECT_EQ(c.sim_decoder, rows[k].dec);
  }
  EXPECT_THROW(model::with_ablation(base, 6), std::invalid_argument);
}

TEST(Config, JsonRoundTripAndValidation) {
  ModelConfig c = model::with_ablation(support::tiny_config(), 3);
  c.beta_max = 0.3;
  c.output_scale = 7.0;
  const auto back = model::model_config_from_json(model::to_json(c));
  EXPECT_EQ(model::to_json(back), model::to_json(c));
  EXPECT_THROW(model::model_config_from_json({{"hidden_dim", 0}}), std::invalid_argument);
  EXPECT_THROW(model::model_config_from_json({{"huber_delta", -1.0}}), std::invalid_argument);
  EXPECT_THROW(model::model_config_from_json({{"beta_max", -0.1}}), std::invalid_argument);
}

TEST(Model, KindsConstructAndUnknownThrows) {
  for (const auto& kind : model::model_kinds()) {
    ASSERT_TRUE(model::is_model_kind(kind));
    EXPECT_NE(model::make_model(kind, support::tiny_config(), 1), nullptr) << kind;
  }
  EXPECT_FALSE(model::is_model_kind("transformer"));
  EXPECT_THROW(model::make_model("transformer", support::tiny_config(), 1), std::invalid_argument);
}

TEST(Model, SamplingIsDeterministicGivenSeed) {
  Rng rng(1);
  const auto cfg = support::tiny_config();
  IlvmModel m(cfg, 7);
  const auto scene = support::random_scene(rng, 3, cfg.history, cfg.horizon, 11);
  const auto a = m.sample(scene, 6, 42);
  const auto b = m.sample(scene, 6, 42);
  expect_same_samples(a, b);
  validate_samples(a);
  const auto c = m.sample(scene, 6, 43);
  EXPECT_NE(a.xy, c.xy);
  // Different replicas draw different latents.
  EXPECT_GT(max_track_diff(a, 0, 1, 0), 0.0);
}

TEST(Model, SamplesIndependentOfChunking) {
  Rng rng(2);
  const auto cfg = support::tiny_config();
  IlvmModel m(cfg, 3);
  const auto scenes = random_scenes(rng, 4, cfg);
  const auto together = m.sample(scenes, 5, 9);
  for (std::size_t k = 0; k < scenes.size(); ++k) expect_same_samples(together[k], m.sample(scenes[k], 5, 9));
}

TEST(Model, PermutationEquivariantEndToEnd) {
  Rng rng(3);
  for (int ablation = 0; ablation < 6; ++ablation) {
    const auto cfg = model::with_ablation(support::tiny_config(), ablation);
    IlvmModel m(cfg, 100 + ablation);
    const auto scene = support::random_scene(rng, 4, cfg.history, cfg.horizon, 5);
    const auto perm = support::random_permutation(scene.size(), rng);
    Scene permuted = scene;
    for (std::size_t i = 0; i < perm.size(); ++i) permuted.actors[i] = scene.actors[perm[i]];
    const auto a = m.sample(scene, 4, 17);
    const auto b = m.sample(permuted, 4, 17);
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t t = 0; t < cfg.horizon; ++t) {
          EXPECT_EQ(b.local(s, i, t).x, a.local(s, perm[i], t).x);
          EXPECT_EQ(b.local(s, i, t).y, a.local(s, perm[i], t).y);
        }
  }
}

TEST(Model, InterpolationEndpointsMatchPriorSamples) {
  Rng rng(4);
  const auto cfg = support::tiny_config();
  IlvmModel m(cfg, 5);
  const auto scene = support::random_scene(rng, 3, cfg.history, cfg.horizon, 8);
  const auto za = m.sample_latent(scene, 21, 0);
  const auto zb = m.sample_latent(scene, 21, 1);
  const auto path = m.interpolate(scene, za, zb, 5);
  const auto direct = m.sample(scene, 2, 21);
  ASSERT_EQ(path.samples, 5u);
  for (std::size_t n = 0; n < scene.size(); ++n)
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
      EXPECT_NEAR(geo::norm(path.local(0, n, t) - direct.local(0, n, t)), 0.0, 1e-12);
      EXPECT_NEAR(geo::norm(path.local(4, n, t) - direct.local(1, n, t)), 0.0, 1e-12);
    }
  const auto flat = m.interpolate(scene, za, za, 4);
  for (std::size_t s = 1; s < 4; ++s)
    for (std::size_t n = 0; n < scene.size(); ++n) EXPECT_EQ(max_track_diff(flat, 0, s, n), 0.0);
  EXPECT_THROW(m.interpolate(scene, za, zb, 1), std::invalid_argument);
  EXPECT_THROW(m.interpolate(scene, za, Tensor::zeros({2, cfg.latent_dim}), 3), ad::ShapeError);
}

// Moving one actor's latent moves the others only through the decoder SIM.
TEST(Model, LatentOfOneActorReachesOthersThroughDecoder) {
  Rng rng(5);
  for (int ablation : {0, 4}) {
    auto cfg = model::with_ablation(support::tiny_config(), ablation);
    cfg.hidden_dim = 16;
    IlvmModel m(cfg, 6);
    for (int trial = 0; trial < 5; ++trial) {
      const auto scene = support::random_scene(rng, 3, cfg.history, cfg.horizon, 30 + trial);
      const auto za = m.sample_latent(scene, trial, 0);
      auto zb = Tensor::from(za.shape(), {za.values().begin(), za.values().end()});
      for (std::size_t d = 0; d < cfg.latent_dim; ++d) zb.mutable_values()[d] += 1.0;  // actor 0
      const auto path = m.interpolate(scene, za, zb, 2);
      EXPECT_GT(max_track_diff(path, 0, 1, 0), 0.0);
      for (std::size_t n = 1; n < scene.size(); ++n) {
        if (ablation == 0) {
          EXPECT_GT(max_track_diff(path, 0, 1, n), 0.0);
        } else {
          EXPECT_EQ(max_track_diff(path, 0, 1, n), 0.0);
        }
      }
    }
  }
}

TEST(Model, CollapsedPriorGivesIdenticalSamples) {
  Rng rng(6);
  const auto cfg = support::tiny_config();
  IlvmModel m(cfg, 8);
  for (const auto& [name, t] : m.parameters().items()) {
    if (name.rfind("prior.log_sigma.out_mlp.", 0) != 0) continue;
    auto p = t;
    const bool last_bias = name == "prior.log_sigma.out_mlp.1.bias";
    for (auto& v : p.mutable_values()) v = last_bias ? -60.0 : 0.0;
  }
  const auto scene = support::random_scene(rng, 3, cfg.history, cfg.horizon, 2);
  const auto set = m.sample(scene, 8, 4);
  for (std::size_t s = 1; s < 8; ++s)
    for (std::size_t n = 0; n < scene.size(); ++n) EXPECT_NEAR(max_track_diff(set, 0, s, n), 0.0, 1e-12);
}

TEST(Model, StandardNormalPriorWhenNotLearned) {
  const auto cfg = model::with_ablation(support::tiny_config(), 2);
  IlvmModel m(cfg, 1);
  for (const auto& [name, t] : m.parameters().items()) EXPECT_NE(name.rfind("prior.", 0), 0u) << name;
  Rng rng(7);
  const auto scenes = random_scenes(rng, 2, cfg);
  const auto b = m.batch(scenes);
  const auto p = m.prior(m.encode_actor_features(b), b);
  for (double v : p.mu.values()) EXPECT_EQ(v, 0.0);
  for (double v : p.log_sigma.values()) EXPECT_EQ(v, 0.0);
}

double huber_oracle(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double kl_oracle(const ad::DiagGaussian& q, const ad::DiagGaussian& p) {
  double kl = 0.0;
  for (std::size_t i = 0; i < q.mu.numel(); ++i) {
    const double lq = q.log_sigma.values()[i], lp = p.log_sigma.values()[i];
    const double dm = q.mu.values()[i] - p.mu.values()[i];
    kl += lp - lq + (std::exp(2 * lq) + dm * dm) / (2 * std::exp(2 * lp)) - 0.5;
  }
  return kl;
}

TEST(Loss, MatchesCompositionOfParts) {
  Rng rng(8);
  const auto cfg = support::tiny_config();
  IlvmModel m(cfg, 9);
  const auto scenes = random_scenes(rng, 3, cfg);
  const auto b = m.batch(scenes);
  const auto eps = support::random_tensor({b.rows, cfg.latent_dim}, rng, -2, 2, false);
  const double beta = 0.37;
  const auto parts = m.forecast_loss(b, beta, eps);

  const auto x = m.encode_actor_features(b);
  const auto q = m.posterior(x, b);
  const auto p = m.prior(x, b);
  const auto y = m.decode(x, ad::reparam_sample(q, eps), b);
  double recon = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i)
    recon += huber_oracle(y.values()[i] - b.future.values()[i], cfg.huber_delta);
  const double kl = kl_oracle(q, p);
  EXPECT_NEAR(parts.recon, recon / 3.0, 1e-12);
  EXPECT_NEAR(parts.kl, kl / 3.0, 1e-12);
  EXPECT_NEAR(parts.loss.item(), (recon + beta * kl) / 3.0, 1e-12);

  const auto zero = m.forecast_loss(b, 0.0, eps);
  EXPECT_EQ(zero.loss.item(), zero.recon);
}

TEST(Loss, KlNonNegative) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cfg = support::tiny_config();
    IlvmModel m(cfg, 100 + trial);
    const auto scenes = random_scenes(rng, 2, cfg, 10 * trial);
    EXPECT_GE(m.loss(m.batch(scenes), 1.0, rng).kl, 0.0);
  }
}

TEST(Loss, ExplicitOutputUsesGaussianNll) {
  Rng rng(10);
  const auto cfg = model::with_ablation(support::tiny_config(), 1);
  IlvmModel m(cfg, 2);
  const auto scenes = random_scenes(rng, 2, cfg);
  const auto b = m.batch(scenes);
  const auto eps = support::random_tensor({b.rows, cfg.latent_dim}, rng, -1, 1, false);
  const auto x = m.encode_actor_features(b);
  const auto raw = m.decode(x, ad::reparam_sample(m.posterior(x, b), eps), b);
  ASSERT_EQ(raw.cols(), 5 * cfg.horizon);
  const double nll = ad::gaussian2d_nll(raw, b.future).item();
  EXPECT_NEAR(m.forecast_loss(b, 0.0, eps).recon, nll / 2.0, 1e-12);
}

TEST(Loss, EveryAblationTrainsOneStep) {
  Rng rng(11);
  for (int ablation = 0; ablation < 6; ++ablation) {
    const auto cfg = model::with_ablation(support::tiny_config(), ablation);
    IlvmModel m(cfg, 50 + ablation);
    const auto scenes = random_scenes(rng, 3, cfg);
    const auto b = m.batch(scenes);
    optim::Adam adam(m.parameters(), {});
    Rng noise(1);
    auto parts = m.loss(b, 0.1, noise);
    ASSERT_TRUE(std::isfinite(parts.loss.item()));
    parts.loss.backward();
    adam.step();
  }
}

// Gradient of the full loss, checked separately on each parameter group.
TEST(Loss, GradientMatchesFiniteDifferencesPerModule) {
  Rng rng(12);
  const std::vector<std::string> groups = {"actor_encoder.", "prior.", "encoder.", "decoder."};
  std::vector<double> worst(groups.size(), 0.0);
  std::vector<std::size_t> checked(groups.size(), 0);
  for (int instance = 0; instance < 10; ++instance) {
    const auto cfg = support::tiny_config();
    IlvmModel m(cfg, 200 + instance);
    support::jitter_parameters(m.parameters(), rng);
    const auto scenes = random_scenes(rng, 2, cfg, 50 + 2 * instance);
    const auto b = m.batch(scenes);
    const auto eps = support::random_tensor({b.rows, cfg.latent_dim}, rng, -1, 1, false);
    const auto f = [&]() { return m.forecast_loss(b, 0.5, eps).loss; };
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<Tensor> leaves;
      for (const auto& [name, t] : m.parameters().items())
        if (name.rfind(groups[g], 0) == 0) leaves.push_back(t);
      ASSERT_FALSE(leaves.empty()) << groups[g];
      support::GradCheckOptions opts;
      opts.max_coords = 25;
      const auto r = support::grad_check(f, leaves, rng, opts);
      worst[g] = std::max(worst[g], r.max_rel_error);
      checked[g] += r.checked;
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    EXPECT_LT(worst[g], 1e-4) << groups[g];
    EXPECT_GT(checked[g], 100u) << groups[g];
  }
}

TEST(Loss, RejectsReplicatedBatch) {
  Rng rng(13);
  const auto cfg = support::tiny_config();
  IlvmModel m(cfg, 1);
  const auto scenes = random_scenes(rng, 1, cfg);
  EXPECT_THROW(m.loss(m.batch(scenes, 2), 0.1, rng), std::invalid_argument);
}

}  // namespace
