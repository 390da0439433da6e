#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "ilvm/baselines.hpp"
#include "ilvm/train.hpp"

namespace {

using namespace ilvm;
namespace support = ilvm::testing;

std::vector<Scene> random_scenes(Rng& rng, std::size_t count, const model::ModelConfig& cfg) {
  std::vector<Scene> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(support::random_scene(rng, 2 + k % 2, cfg.history, cfg.horizon, k + 1, 10.0));
  return out;
}

std::vector<double> flat_parameters(const model::ForecastModel& m) {
  std::vector<double> v;
  for (const auto& [name, t] : m.parameters().items()) v.insert(v.end(), t.values().begin(), t.values().end());
  return v;
}

TEST(Train, SameSeedSameParameters) {
  Rng rng(1);
  const auto cfg = support::tiny_config();
  const auto scenes = random_scenes(rng, 10, cfg);
  model::TrainOptions opts;
  opts.steps = 30;
  opts.batch_size = 4;
  opts.seed = 5;
  for (const auto& kind : model::model_kinds()) {
    auto a = model::make_model(kind, cfg, 1);
    auto b = model::make_model(kind, cfg, 1);
    const auto ca = model::train(*a, scenes, opts);
    const auto cb = model::train(*b, scenes, opts);
    ASSERT_EQ(ca.size(), 30u);
    for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].loss, cb[i].loss) << kind;
    EXPECT_EQ(flat_parameters(*a), flat_parameters(*b)) << kind;

    auto c = model::make_model(kind, cfg, 1);
    opts.seed = 6;
    model::train(*c, scenes, opts);
    opts.seed = 5;
    EXPECT_NE(flat_parameters(*a), flat_parameters(*c)) << kind;
  }
}

TEST(Train, RecordsFollowBetaSchedule) {
  Rng rng(2);
  auto cfg = support::tiny_config();
  cfg.beta_max = 0.2;
  cfg.beta_warmup = 20;
  cfg.beta_cycle = 8;
  const auto scenes = random_scenes(rng, 6, cfg);
  model::IlvmModel m(cfg, 2);
  model::TrainOptions opts;
  opts.steps = 25;
  opts.batch_size = 3;
  std::size_t callbacks = 0;
  const auto curve = model::train(m, scenes, opts, [&](const model::TrainRecord&) { ++callbacks; });
  EXPECT_EQ(callbacks, 25u);
  for (const auto& r : curve) {
    EXPECT_EQ(r.beta, model::beta_schedule(cfg, r.step));
    EXPECT_NEAR(r.loss, r.recon + r.beta * r.kl, 1e-9 * std::max(1.0, std::abs(r.loss)));
    EXPECT_GE(r.grad_norm, 0.0);
  }
  opts.fixed_beta = 0.7;
  for (const auto& r : model::train(m, scenes, opts)) EXPECT_EQ(r.beta, 0.7);
}

TEST(Train, OverfitsASmallSet) {
  Rng rng(3);
  auto cfg = support::tiny_config();
  cfg.hidden_dim = 16;
  cfg.actor_feat_dim = 16;
  const auto scenes = random_scenes(rng, 4, cfg);
  model::IlvmModel m(cfg, 3);
  model::TrainOptions opts;
  opts.steps = 600;
  opts.batch_size = 4;
  opts.lr = 3e-3;
  opts.fixed_beta = 0.0;
  const double before = model::evaluate_loss(m, scenes, 0.0, 1).recon;
  model::train(m, scenes, opts);
  const double after = model::evaluate_loss(m, scenes, 0.0, 1).recon;
  EXPECT_LT(after, 0.1 * before);
}

TEST(Train, NonFiniteLossRaisesDivergence) {
  Rng rng(4);
  const auto cfg = support::tiny_config();
  const auto scenes = random_scenes(rng, 4, cfg);
  model::IlvmModel m(cfg, 4);
  m.parameters().fill(1e200);
  model::TrainOptions opts;
  opts.steps = 3;
  EXPECT_THROW(model::train(m, scenes, opts), model::DivergenceError);
}

TEST(Train, OptionsValidatedAndRoundTrip) {
  model::TrainOptions o;
  o.steps = 12;
  o.fixed_beta = 0.5;
  const auto back = model::train_options_from_json(model::to_json(o));
  EXPECT_EQ(back.steps, 12);
  EXPECT_EQ(*back.fixed_beta, 0.5);
  EXPECT_THROW(model::train_options_from_json({{"lr", 0.0}}), std::invalid_argument);
  EXPECT_THROW(model::train_options_from_json({{"batch_size", 0}}), std::invalid_argument);
  model::IlvmModel m(support::tiny_config(), 1);
  EXPECT_THROW(model::train(m, std::vector<Scene>{}, o), std::invalid_argument);
}

TEST(Train, EvaluateLossIndependentOfBatchSize) {
  Rng rng(5);
  const auto cfg = support::tiny_config();
  const auto scenes = random_scenes(rng, 7, cfg);
  model::IndependentModel m(cfg, 5);
  // No posterior noise in this model, so only the averaging differs.
  EXPECT_NEAR(model::evaluate_loss(m, scenes, 0.0, 1, 2).loss, model::evaluate_loss(m, scenes, 0.0, 1, 64).loss, 1e-9);
}

}  // namespace
