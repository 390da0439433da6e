#pragma once

// Contrast models sharing the actor encoder with the ILVM:
//  - independent: per-actor Gaussian waypoints, no interaction, sampled with
//    one noise vector per (actor, sample) held constant over time;
//  - autoregressive: step-by-step Gaussian displacements conditioned on the
//    actor's previous state and a max-pool over neighbours' previous states.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ilvm/model.hpp"

namespace ilvm::model {

class IndependentModel : public ForecastModel {
 public:
  IndependentModel(const ModelConfig& cfg, std::uint64_t init_seed);

  std::string kind() const override { return "independent"; }

  /// Raw Gaussian parameters [base_rows x 5T], means in metres.
  Tensor head_forward(const SceneBatch& batch) const;
  LossParts loss(const SceneBatch& batch, double beta, Rng& rng) const override;

  std::vector<SceneSampleSet> sample(std::span<const Scene> scenes, std::size_t samples,
                                     std::uint64_t seed) const override;
  using ForecastModel::sample;

  /// Samples with explicit noise, eps[s * N + n] = (e1, e2).
  SceneSampleSet sample_with_noise(const Scene& scene, std::size_t samples,
                                   std::span<const std::array<double, 2>> eps) const;

 private:
  ActorEncoder actor_encoder_;
  nn::Mlp head_;
};

class AutoregressiveModel : public ForecastModel {
 public:
  AutoregressiveModel(const ModelConfig& cfg, std::uint64_t init_seed);

  std::string kind() const override { return "autoregressive"; }

  /// Teacher-forced NLL; conditioning states are ground truth plus N(0, alpha^2 I).
  LossParts loss(const SceneBatch& batch, double beta, Rng& rng) const override;
  /// Same with caller-supplied conditioning noise [base_rows x 2T] (before
  /// scaling by alpha; column 2t holds the noise of step t).
  LossParts teacher_forced_loss(const SceneBatch& batch, const Tensor& noise) const;

  /// Called after step t has been sampled with the per-row states of that step
  /// (actor frames); edits are seen by the following steps.
  using StepHook = std::function<void(std::size_t t, std::vector<geo::Vec2>& states)>;

  struct Rollout {
    std::vector<SceneSampleSet> samples;
    std::vector<std::vector<double>> step_params;  // per step, [rows x 5] raw displacement Gaussians
    std::size_t sequential_steps = 0;
  };
  Rollout rollout(std::span<const Scene> scenes, std::size_t samples, std::uint64_t seed,
                  const StepHook& hook = {}) const;

  std::vector<SceneSampleSet> sample(std::span<const Scene> scenes, std::size_t samples,
                                     std::uint64_t seed) const override;
  using ForecastModel::sample;

  /// Conditioning features of one step: [state * position, (state - prev) * delta].
  Tensor state_features(std::span<const geo::Vec2> state, std::span<const geo::Vec2> prev) const;
  /// Max over neighbours of embedded neighbour states seen from each row's frame.
  Tensor social_features(const SceneBatch& batch, std::span<const geo::Vec2> state) const;

 private:
  Tensor step(const Tensor& h, const Tensor& x, const SceneBatch& batch, std::span<const geo::Vec2> state,
              std::span<const geo::Vec2> prev, Tensor& raw) const;

  ActorEncoder actor_encoder_;
  nn::Linear social_;
  nn::GruCell gru_;
  nn::Mlp out_;
};

}  // namespace ilvm::model
