#pragma once

// Forecasting models. All of them share the past-trajectory actor encoder and
// produce SceneSampleSets; they differ in how the joint output is factorised.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/batch.hpp"
#include "ilvm/distributions.hpp"
#include "ilvm/nn.hpp"
#include "ilvm/samples.hpp"
#include "ilvm/scene.hpp"
#include "ilvm/sim.hpp"

namespace ilvm::model {

struct ModelConfig {
  std::size_t history = 6;
  std::size_t horizon = 10;
  std::size_t actor_feat_dim = 64;
  std::size_t latent_dim = 8;
  std::size_t hidden_dim = 64;
  std::size_t sim_rounds = 1;

  // Ablation switches; all true is the full model (M0).
  bool learned_prior = true;
  bool implicit_output = true;
  bool sim_encoder = true;
  bool sim_decoder = true;

  double beta_max = 0.05;
  std::int64_t beta_warmup = 2000;
  std::int64_t beta_cycle = 500;
  double huber_delta = 1.0;

  // Decoder outputs are multiplied by this to get metres.
  double output_scale = 10.0;
  FeatureScales scales;

  // Std-dev of the conditioning noise of the autoregressive baseline, metres.
  double ar_noise_alpha = 0.2;
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Missing fields keep their defaults. Throws std::invalid_argument on invalid values.
ModelConfig model_config_from_json(const nlohmann::json& j);
void validate(const ModelConfig& cfg);

/// Flags of ablation M0..M5.
ModelConfig with_ablation(ModelConfig cfg, int ablation);

/// Cyclic warm-up: inside each cycle of C steps beta ramps linearly from 0 to
/// beta_max over the first half and then holds; from step W on it stays at beta_max.
double beta_schedule(const ModelConfig& cfg, std::int64_t step);

struct LossParts {
  Tensor loss;         // scalar, mean over scenes in the batch
  double recon = 0.0;  // per-scene mean
  double kl = 0.0;     // per-scene mean, zero for models without a latent
};

/// Standard normals for each replicated row, drawn from a stream keyed by
/// (seed, tag, scene id, replica, track id) so that a row's noise does not
/// depend on its position in the batch.
Tensor row_noise(const SceneBatch& batch, std::uint64_t seed, std::uint64_t tag, std::size_t cols);

class ActorEncoder {
 public:
  ActorEncoder() = default;
  ActorEncoder(nn::ParameterSet& params, const std::string& prefix, const ModelConfig& cfg, Rng& rng);
  /// [base_rows x actor_feat_dim]
  Tensor operator()(const SceneBatch& batch) const;

 private:
  nn::GruCell gru_;
  nn::Mlp mlp_;
};

/// A SIM, or a per-actor 3-layer MLP of matching widths when interaction is
/// ablated away.
class InteractionBlock {
 public:
  InteractionBlock() = default;
  InteractionBlock(nn::ParameterSet& params, const std::string& prefix, bool use_sim, const SimConfig& cfg, Rng& rng);
  Tensor operator()(const Tensor& hidden, const ActorGraph& graph) const;
  bool uses_sim() const { return use_sim_; }

 private:
  bool use_sim_ = true;
  Sim sim_;
  nn::Mlp mlp_;
};

class ForecastModel {
 public:
  virtual ~ForecastModel() = default;

  virtual std::string kind() const = 0;
  virtual bool has_latent() const { return false; }
  /// Batch must be built with one replica and carry ground-truth futures.
  virtual LossParts loss(const SceneBatch& batch, double beta, Rng& rng) const = 0;
  /// S joint samples per scene, deterministic given the seed.
  virtual std::vector<SceneSampleSet> sample(std::span<const Scene> scenes, std::size_t samples,
                                             std::uint64_t seed) const = 0;
  SceneSampleSet sample(const Scene& scene, std::size_t samples, std::uint64_t seed) const;

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  SceneBatch batch(std::span<const Scene> scenes, std::size_t replicas = 1) const;

 protected:
  explicit ForecastModel(const ModelConfig& cfg);
  ModelConfig cfg_;
  nn::ParameterSet params_;
};

class IlvmModel : public ForecastModel {
 public:
  IlvmModel(const ModelConfig& cfg, std::uint64_t init_seed);

  std::string kind() const override;
  bool has_latent() const override { return true; }

  /// Per base row.
  Tensor encode_actor_features(const SceneBatch& batch) const;
  /// Base-row features repeated for every replica.
  static Tensor replicate(const Tensor& base, const SceneBatch& batch);

  /// Over replicated rows. A standard normal when the prior is not learned.
  ad::DiagGaussian prior(const Tensor& x, const SceneBatch& batch) const;
  /// Needs ground-truth futures.
  ad::DiagGaussian posterior(const Tensor& x, const SceneBatch& batch) const;
  /// [rows x 2T] waypoints in metres; with an explicit output head, raw
  /// Gaussian parameters [rows x 5T] whose means are in metres.
  Tensor decode(const Tensor& x, const Tensor& z, const SceneBatch& batch) const;

  /// Loss with a caller-supplied posterior noise [rows x D].
  LossParts forecast_loss(const SceneBatch& batch, double beta, const Tensor& eps) const;
  LossParts loss(const SceneBatch& batch, double beta, Rng& rng) const override;

  std::vector<SceneSampleSet> sample(std::span<const Scene> scenes, std::size_t samples,
                                     std::uint64_t seed) const override;
  using ForecastModel::sample;

  /// Prior draw for each actor of one scene, [N x D].
  Tensor sample_latent(const Scene& scene, std::uint64_t seed, std::size_t replica = 0) const;
  /// Decodes z = (1 - l) z_a + l z_b at l = 0, 1/(k-1), ..., 1; one sample per step.
  SceneSampleSet interpolate(const Scene& scene, const Tensor& z_a, const Tensor& z_b, std::size_t steps) const;

 private:
  /// Fills sample sets from decoder output over a replicated batch.
  std::vector<SceneSampleSet> to_samples(std::span<const Scene> scenes, const SceneBatch& batch,
                                         const Tensor& decoded, std::uint64_t seed) const;

  ActorEncoder actor_encoder_;
  nn::Mlp prior_init_;
  InteractionBlock prior_mu_;
  InteractionBlock prior_log_sigma_;
  nn::GruCell future_gru_;
  nn::Mlp encoder_init_;
  InteractionBlock encoder_mu_;
  InteractionBlock encoder_log_sigma_;
  nn::Mlp decoder_init_;
  InteractionBlock decoder_out_;
};

/// Recognised kinds: ilvm, ilvm-m0 .. ilvm-m5, independent, autoregressive.
/// ilvm-mK applies the flags of ablation K on top of `cfg`.
std::unique_ptr<ForecastModel> make_model(const std::string& kind, const ModelConfig& cfg, std::uint64_t init_seed);
bool is_model_kind(const std::string& kind);
const std::vector<std::string>& model_kinds();

/// Multiplies the mean columns of raw [R x 5K] Gaussian parameters by `scale`.
Tensor scale_gaussian_means(const Tensor& raw, double scale);

/// Writes mean + L eps into sample s of actor n for every waypoint, using the
/// same (e1, e2) at all timesteps.
void constant_noise_fill(SceneSampleSet& set, std::size_t s, std::size_t n, std::span<const double> raw_row,
                         double e1, double e2);

}  // namespace ilvm::model
