#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ilvm::testing {

Scene random_scene(Rng& rng, std::size_t actors, std::size_t history, std::size_t horizon, std::uint64_t id,
                   double half_size) {
  Scene scene;
  scene.id = id;
  scene.kind = ScenarioKind::car_follow;
  for (std::size_t n = 0; n < actors; ++n) {
    Actor a;
    a.track_id = 100 + n;
    a.pose = geo::Pose2(uniform(rng, -half_size, half_size), uniform(rng, -half_size, half_size),
                        uniform(rng, -std::numbers::pi, std::numbers::pi));
    a.length = uniform(rng, 3.5, 5.0);
    a.width = uniform(rng, 1.6, 2.2);
    const double v = uniform(rng, 0.0, 12.0) * scene.dt;
    const double curl = uniform(rng, -0.05, 0.05);
    for (std::size_t k = history; k >= 1; --k) {
      const double s = -v * static_cast<double>(k);
      a.past.push_back({s, curl * s * s + uniform(rng, -0.05, 0.05)});
    }
    for (std::size_t k = 1; k <= horizon; ++k) {
      const double s = v * static_cast<double>(k);
      a.future.push_back({s, curl * s * s + uniform(rng, -0.05, 0.05)});
    }
    scene.actors.push_back(std::move(a));
  }
  return scene;
}

SceneSampleSet random_samples(const Scene& scene, std::size_t samples, Rng& rng, double spread) {
  auto set = SceneSampleSet::for_scene(scene, samples);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t n = 0; n < set.actors; ++n)
      for (std::size_t t = 0; t < set.horizon; ++t) {
        const auto g = scene.actors[n].future[t];
        set.set(s, n, t, {g.x + uniform(rng, -spread, spread), g.y + uniform(rng, -spread, spread)});
      }
  return set;
}

model::ModelConfig tiny_config(std::size_t history, std::size_t horizon) {
  model::ModelConfig cfg;
  cfg.history = history;
  cfg.horizon = horizon;
  cfg.actor_feat_dim = 4;
  cfg.hidden_dim = 5;
  cfg.latent_dim = 2;
  return cfg;
}

void jitter_parameters(const nn::ParameterSet& params, Rng& rng, double spread) {
  for (auto [name, t] : params.items())
    for (auto& v : t.mutable_values()) v += uniform(rng, -spread, spread);
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  if (n < 2) return p;
  do {
    std::shuffle(p.begin(), p.end(), rng);
  } while (std::is_sorted(p.begin(), p.end()));
  return p;
}

}  // namespace ilvm::testing
