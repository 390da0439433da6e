#include "ilvm/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "ilvm/baselines.hpp"

namespace ilvm::model {
namespace {

using nlohmann::json;

constexpr std::uint64_t kLatentNoise = 1;
constexpr std::uint64_t kOutputNoise = 2;

SimConfig sim_config(const ModelConfig& cfg, std::size_t output_dim) {
  SimConfig s;
  s.hidden_dim = cfg.hidden_dim;
  s.edge_dim = cfg.hidden_dim;
  s.out_hidden = cfg.hidden_dim;
  s.output_dim = output_dim;
  s.rounds = cfg.sim_rounds;
  return s;
}

}  // namespace

json to_json(const ModelConfig& cfg) {
  return {{"history", cfg.history},
          {"horizon", cfg.horizon},
          {"actor_feat_dim", cfg.actor_feat_dim},
          {"latent_dim", cfg.latent_dim},
          {"hidden_dim", cfg.hidden_dim},
          {"sim_rounds", cfg.sim_rounds},
          {"learned_prior", cfg.learned_prior},
          {"implicit_output", cfg.implicit_output},
          {"sim_encoder", cfg.sim_encoder},
          {"sim_decoder", cfg.sim_decoder},
          {"beta_max", cfg.beta_max},
          {"beta_warmup", cfg.beta_warmup},
          {"beta_cycle", cfg.beta_cycle},
          {"huber_delta", cfg.huber_delta},
          {"output_scale", cfg.output_scale},
          {"position_scale", cfg.scales.position},
          {"delta_scale", cfg.scales.delta},
          {"ar_noise_alpha", cfg.ar_noise_alpha}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.history = j.value("history", c.history);
  c.horizon = j.value("horizon", c.horizon);
  c.actor_feat_dim = j.value("actor_feat_dim", c.actor_feat_dim);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.sim_rounds = j.value("sim_rounds", c.sim_rounds);
  c.learned_prior = j.value("learned_prior", c.learned_prior);
  c.implicit_output = j.value("implicit_output", c.implicit_output);
  c.sim_encoder = j.value("sim_encoder", c.sim_encoder);
  c.sim_decoder = j.value("sim_decoder", c.sim_decoder);
  c.beta_max = j.value("beta_max", c.beta_max);
  c.beta_warmup = j.value("beta_warmup", c.beta_warmup);
  c.beta_cycle = j.value("beta_cycle", c.beta_cycle);
  c.huber_delta = j.value("huber_delta", c.huber_delta);
  c.output_scale = j.value("output_scale", c.output_scale);
  c.scales.position = j.value("position_scale", c.scales.position);
  c.scales.delta = j.value("delta_scale", c.scales.delta);
  c.ar_noise_alpha = j.value("ar_noise_alpha", c.ar_noise_alpha);
  validate(c);
  return c;
}

void validate(const ModelConfig& c) {
  if (c.history < 1 || c.horizon < 1) throw std::invalid_argument("history and horizon must be at least 1");
  if (c.actor_feat_dim < 1 || c.latent_dim < 1 || c.hidden_dim < 1 || c.sim_rounds < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (c.beta_max < 0.0) throw std::invalid_argument("beta_max must be non-negative");
  if (c.beta_cycle < 2 || c.beta_warmup < 0) throw std::invalid_argument("beta cycle must be >= 2, warm-up >= 0");
  if (!(c.huber_delta > 0.0)) throw std::invalid_argument("huber_delta must be positive");
  if (!(c.output_scale > 0.0)) throw std::invalid_argument("output_scale must be positive");
  if (c.ar_noise_alpha < 0.0) throw std::invalid_argument("ar_noise_alpha must be non-negative");
}

ModelConfig with_ablation(ModelConfig cfg, int ablation) {
  cfg.learned_prior = cfg.implicit_output = cfg.sim_encoder = cfg.sim_decoder = true;
  switch (ablation) {
    case 0: break;
    case 1: cfg.implicit_output = false; break;
    case 2: cfg.learned_prior = false; break;
    case 3: cfg.sim_encoder = false; break;
    case 4: cfg.sim_decoder = false; break;
    case 5: cfg.sim_encoder = cfg.sim_decoder = false; break;
    default: throw std::invalid_argument("ablation index must be in 0..5");
  }
  return cfg;
}

double beta_schedule(const ModelConfig& cfg, std::int64_t step) {
  if (step < 0) throw std::invalid_argument("negative step");
  if (step >= cfg.beta_warmup) return cfg.beta_max;
  const double phase = static_cast<double>(step % cfg.beta_cycle);
  return cfg.beta_max * std::min(1.0, phase / (0.5 * static_cast<double>(cfg.beta_cycle)));
}

Tensor row_noise(const SceneBatch& batch, std::uint64_t seed, std::uint64_t tag, std::size_t cols) {
  std::vector<double> v(batch.rows * cols);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    Rng rng(derive_seed(seed, {tag, batch.scene_ids[batch.scene_of_row[r]], batch.replica_of_row[r], batch.track_ids[r]}));
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = standard_normal(rng);
  }
  return Tensor::from({batch.rows, cols}, std::move(v));
}

Tensor scale_gaussian_means(const Tensor& raw, double scale) {
  if (raw.cols() % ad::kGaussianParams != 0) throw ad::ShapeError("raw Gaussian columns must be a multiple of 5");
  std::vector<double> mask(raw.numel(), 1.0);
  for (std::size_t r = 0; r < raw.rows(); ++r)
    for (std::size_t c = 0; c < raw.cols(); c += ad::kGaussianParams) {
      mask[r * raw.cols() + c] = scale;
      mask[r * raw.cols() + c + 1] = scale;
    }
  return ad::mul(raw, Tensor::from(raw.shape(), std::move(mask)));
}

void constant_noise_fill(SceneSampleSet& set, std::size_t s, std::size_t n, std::span<const double> raw_row,
                         double e1, double e2) {
  for (std::size_t t = 0; t < set.horizon; ++t) {
    const auto g = ad::gaussian_from_raw(raw_row.data() + t * ad::kGaussianParams);
    const auto p = g.sample(e1, e2);
    set.set(s, n, t, {p[0], p[1]});
  }
}

// ---------------------------------------------------------------------------

ActorEncoder::ActorEncoder(nn::ParameterSet& params, const std::string& prefix, const ModelConfig& cfg, Rng& rng)
    : gru_(params, prefix + ".gru", 4, cfg.hidden_dim, rng),
      mlp_(params, prefix + ".mlp", {cfg.hidden_dim, cfg.hidden_dim, cfg.actor_feat_dim}, rng) {}

Tensor ActorEncoder::operator()(const SceneBatch& batch) const {
  return mlp_(nn::gru_rollout(gru_, batch.past_inputs, batch.base_rows));
}

InteractionBlock::InteractionBlock(nn::ParameterSet& params, const std::string& prefix, bool use_sim,
                                   const SimConfig& cfg, Rng& rng)
    : use_sim_(use_sim) {
  if (use_sim) {
    sim_ = Sim(params, prefix, cfg, rng);
  } else {
    mlp_ = nn::Mlp(params, prefix + ".mlp", {cfg.hidden_dim, cfg.edge_dim, cfg.out_hidden, cfg.output_dim}, rng);
  }
}

Tensor InteractionBlock::operator()(const Tensor& hidden, const ActorGraph& graph) const {
  return use_sim_ ? sim_(hidden, graph) : mlp_(hidden);
}

ForecastModel::ForecastModel(const ModelConfig& cfg) : cfg_(cfg) { validate(cfg_); }

SceneBatch ForecastModel::batch(std::span<const Scene> scenes, std::size_t replicas) const {
  for (const auto& s : scenes) {
    if (s.history() != cfg_.history) {
      throw std::invalid_argument("scene " + std::to_string(s.id) + " has " + std::to_string(s.history()) +
                                  " past waypoints, model expects " + std::to_string(cfg_.history));
    }
  }
  return make_batch(scenes, replicas, cfg_.scales);
}

SceneSampleSet ForecastModel::sample(const Scene& scene, std::size_t samples, std::uint64_t seed) const {
  return sample(std::span<const Scene>(&scene, 1), samples, seed).front();
}

// ---------------------------------------------------------------------------

IlvmModel::IlvmModel(const ModelConfig& cfg, std::uint64_t init_seed) : ForecastModel(cfg) {
  Rng rng(init_seed);
  const std::size_t h = cfg_.hidden_dim, f = cfg_.actor_feat_dim, d = cfg_.latent_dim, t = cfg_.horizon;
  actor_encoder_ = ActorEncoder(params_, "actor_encoder", cfg_, rng);
  if (cfg_.learned_prior) {
    prior_init_ = nn::Mlp(params_, "prior.init", {f, h, h}, rng);
    prior_mu_ = InteractionBlock(params_, "prior.mu", cfg_.sim_encoder, sim_config(cfg_, d), rng);
    prior_log_sigma_ = InteractionBlock(params_, "prior.log_sigma", cfg_.sim_encoder, sim_config(cfg_, d), rng);
  }
  future_gru_ = nn::GruCell(params_, "encoder.future_gru", 4, h, rng);
  encoder_init_ = nn::Mlp(params_, "encoder.init", {f + h, h, h}, rng);
  encoder_mu_ = InteractionBlock(params_, "encoder.mu", cfg_.sim_encoder, sim_config(cfg_, d), rng);
  encoder_log_sigma_ = InteractionBlock(params_, "encoder.log_sigma", cfg_.sim_encoder, sim_config(cfg_, d), rng);
  decoder_init_ = nn::Mlp(params_, "decoder.init", {f + d, h, h}, rng);
  const std::size_t out = cfg_.implicit_output ? 2 * t : ad::kGaussianParams * t;
  decoder_out_ = InteractionBlock(params_, "decoder.out", cfg_.sim_decoder, sim_config(cfg_, out), rng);
}

std::string IlvmModel::kind() const { return "ilvm"; }

Tensor IlvmModel::encode_actor_features(const SceneBatch& batch) const { return actor_encoder_(batch); }

Tensor IlvmModel::replicate(const Tensor& base, const SceneBatch& batch) {
  if (batch.replicas == 1) return base;
  return ad::gather_rows(base, batch.source);
}

ad::DiagGaussian IlvmModel::prior(const Tensor& x, const SceneBatch& batch) const {
  if (!cfg_.learned_prior) {
    return {Tensor::zeros({batch.rows, cfg_.latent_dim}), Tensor::zeros({batch.rows, cfg_.latent_dim})};
  }
  const Tensor h = prior_init_(x);
  return {prior_mu_(h, batch.graph), prior_log_sigma_(h, batch.graph)};
}

ad::DiagGaussian IlvmModel::posterior(const Tensor& x, const SceneBatch& batch) const {
  if (batch.future_inputs.empty()) throw std::invalid_argument("posterior needs ground-truth futures");
  const Tensor y = replicate(nn::gru_rollout(future_gru_, batch.future_inputs, batch.base_rows), batch);
  const Tensor h = encoder_init_(ad::concat_cols({x, y}));
  return {encoder_mu_(h, batch.graph), encoder_log_sigma_(h, batch.graph)};
}

Tensor IlvmModel::decode(const Tensor& x, const Tensor& z, const SceneBatch& batch) const {
  if (z.rows() != x.rows() || z.cols() != cfg_.latent_dim) {
    throw ad::ShapeError("latent " + ad::to_string(z.shape()) + " does not match features " + ad::to_string(x.shape()));
  }
  const Tensor out = decoder_out_(decoder_init_(ad::concat_cols({x, z})), batch.graph);
  return cfg_.implicit_output ? ad::scale(out, cfg_.output_scale) : scale_gaussian_means(out, cfg_.output_scale);
}

LossParts IlvmModel::forecast_loss(const SceneBatch& batch, double beta, const Tensor& eps) const {
  if (batch.replicas != 1 || !batch.future.defined()) throw std::invalid_argument("loss needs a plain batch with futures");
  const Tensor x = encode_actor_features(batch);
  const auto q = posterior(x, batch);
  const auto p = prior(x, batch);
  const Tensor y = decode(x, ad::reparam_sample(q, eps), batch);
  const Tensor recon = cfg_.implicit_output ? ad::huber(ad::sub(y, batch.future), cfg_.huber_delta)
                                            : ad::gaussian2d_nll(y, batch.future);
  const Tensor kl = ad::kl_diag_gaussian(q, p);
  const double inv = 1.0 / static_cast<double>(batch.scenes);
  LossParts parts;
  parts.loss = ad::scale(beta == 0.0 ? recon : ad::add(recon, ad::scale(kl, beta)), inv);
  parts.recon = recon.item() * inv;
  parts.kl = kl.item() * inv;
  return parts;
}

LossParts IlvmModel::loss(const SceneBatch& batch, double beta, Rng& rng) const {
  std::vector<double> e(batch.rows * cfg_.latent_dim);
  for (auto& v : e) v = standard_normal(rng);
  return forecast_loss(batch, beta, Tensor::from({batch.rows, cfg_.latent_dim}, std::move(e)));
}

std::vector<SceneSampleSet> IlvmModel::to_samples(std::span<const Scene> scenes, const SceneBatch& batch,
                                                   const Tensor& decoded, std::uint64_t seed) const {
  std::vector<SceneSampleSet> out;
  for (const auto& s : scenes) out.push_back(SceneSampleSet::for_scene(s, batch.replicas));
  const auto v = decoded.values();
  const std::size_t cols = decoded.cols();
  Tensor noise;
  if (!cfg_.implicit_output) noise = row_noise(batch, seed, kOutputNoise, 2);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const std::size_t k = batch.scene_of_row[r];
    const std::size_t n = batch.source[r] - batch.scene_offset[k];
    const std::size_t s = batch.replica_of_row[r];
    const auto row = v.subspan(r * cols, cols);
    if (cfg_.implicit_output) {
      for (std::size_t t = 0; t < cfg_.horizon; ++t) out[k].set(s, n, t, {row[2 * t], row[2 * t + 1]});
    } else {
      constant_noise_fill(out[k], s, n, row, noise.at(r, 0), noise.at(r, 1));
    }
  }
  return out;
}

std::vector<SceneSampleSet> IlvmModel::sample(std::span<const Scene> scenes, std::size_t samples,
                                              std::uint64_t seed) const {
  if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
  ad::NoGradGuard no_grad;
  const SceneBatch b = batch(scenes, samples);
  const Tensor x = replicate(encode_actor_features(b), b);
  const Tensor z = ad::reparam_sample(prior(x, b), row_noise(b, seed, kLatentNoise, cfg_.latent_dim));
  return to_samples(scenes, b, decode(x, z, b), seed);
}

Tensor IlvmModel::sample_latent(const Scene& scene, std::uint64_t seed, std::size_t replica) const {
  ad::NoGradGuard no_grad;
  const SceneBatch b = batch(std::span<const Scene>(&scene, 1), replica + 1);
  const Tensor x = replicate(encode_actor_features(b), b);
  const Tensor z = ad::reparam_sample(prior(x, b), row_noise(b, seed, kLatentNoise, cfg_.latent_dim));
  std::vector<std::size_t> rows(scene.size());
  for (std::size_t n = 0; n < rows.size(); ++n) rows[n] = replica * scene.size() + n;
  return ad::gather_rows(z, rows).detach();
}

SceneSampleSet IlvmModel::interpolate(const Scene& scene, const Tensor& z_a, const Tensor& z_b,
                                      std::size_t steps) const {
  if (steps < 2) throw std::invalid_argument("interpolation needs at least two steps");
  if (z_a.shape() != z_b.shape() || z_a.rows() != scene.size() || z_a.cols() != cfg_.latent_dim) {
    throw ad::ShapeError("interpolation endpoints must both be [N x latent_dim]");
  }
  ad::NoGradGuard no_grad;
  const SceneBatch b = batch(std::span<const Scene>(&scene, 1), steps);
  const Tensor x = replicate(encode_actor_features(b), b);
  const auto a = z_a.values(), bz = z_b.values();
  const std::size_t d = cfg_.latent_dim, n_actors = scene.size();
  std::vector<double> z(b.rows * d);
  for (std::size_t k = 0; k < steps; ++k) {
    const double l = static_cast<double>(k) / static_cast<double>(steps - 1);
    for (std::size_t i = 0; i < n_actors * d; ++i) z[k * n_actors * d + i] = (1.0 - l) * a[i] + l * bz[i];
  }
  const Tensor decoded = decode(x, Tensor::from({b.rows, d}, std::move(z)), b);
  return to_samples(std::span<const Scene>(&scene, 1), b, decoded, 0).front();
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& model_kinds() {
  static const std::vector<std::string> kinds = {"ilvm",    "ilvm-m0", "ilvm-m1",     "ilvm-m2",       "ilvm-m3",
                                                 "ilvm-m4", "ilvm-m5", "independent", "autoregressive"};
  return kinds;
}

bool is_model_kind(const std::string& kind) {
  const auto& k = model_kinds();
  return std::find(k.begin(), k.end(), kind) != k.end();
}

std::unique_ptr<ForecastModel> make_model(const std::string& kind, const ModelConfig& cfg, std::uint64_t init_seed) {
  if (kind == "ilvm") return std::make_unique<IlvmModel>(cfg, init_seed);
  if (kind.size() == 7 && kind.rfind("ilvm-m", 0) == 0 && kind[6] >= '0' && kind[6] <= '5') {
    return std::make_unique<IlvmModel>(with_ablation(cfg, kind[6] - '0'), init_seed);
  }
  if (kind == "independent") return std::make_unique<IndependentModel>(cfg, init_seed);
  if (kind == "autoregressive") return std::make_unique<AutoregressiveModel>(cfg, init_seed);
  throw std::invalid_argument("unknown model kind '" + kind + "'");
}

}  // namespace ilvm::model
