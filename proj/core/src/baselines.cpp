#include "ilvm/baselines.hpp"

#include <stdexcept>

namespace ilvm::model {
namespace {

constexpr std::uint64_t kIndependentNoise = 3;
constexpr std::uint64_t kAutoregressiveNoise = 4;

}  // namespace

IndependentModel::IndependentModel(const ModelConfig& cfg, std::uint64_t init_seed) : ForecastModel(cfg) {
  Rng rng(init_seed);
  actor_encoder_ = ActorEncoder(params_, "actor_encoder", cfg_, rng);
  head_ = nn::Mlp(params_, "independent.head",
                  {cfg_.actor_feat_dim, cfg_.hidden_dim, cfg_.hidden_dim, ad::kGaussianParams * cfg_.horizon}, rng);
}

Tensor IndependentModel::head_forward(const SceneBatch& batch) const {
  return scale_gaussian_means(head_(actor_encoder_(batch)), cfg_.output_scale);
}

LossParts IndependentModel::loss(const SceneBatch& batch, double, Rng&) const {
  if (!batch.future.defined()) throw std::invalid_argument("loss needs ground-truth futures");
  const Tensor nll = ad::gaussian2d_nll(head_forward(batch), batch.future);
  const double inv = 1.0 / static_cast<double>(batch.scenes);
  return {ad::scale(nll, inv), nll.item() * inv, 0.0};
}

std::vector<SceneSampleSet> IndependentModel::sample(std::span<const Scene> scenes, std::size_t samples,
                                                     std::uint64_t seed) const {
  if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
  ad::NoGradGuard no_grad;
  const SceneBatch b = batch(scenes, samples);
  const Tensor raw = head_forward(b);
  const Tensor noise = row_noise(b, seed, kIndependentNoise, 2);
  std::vector<SceneSampleSet> out;
  for (const auto& s : scenes) out.push_back(SceneSampleSet::for_scene(s, samples));
  const std::size_t cols = raw.cols();
  for (std::size_t r = 0; r < b.rows; ++r) {
    const std::size_t k = b.scene_of_row[r];
    const std::size_t base = b.source[r];
    constant_noise_fill(out[k], b.replica_of_row[r], base - b.scene_offset[k], raw.values().subspan(base * cols, cols),
                        noise.at(r, 0), noise.at(r, 1));
  }
  return out;
}

SceneSampleSet IndependentModel::sample_with_noise(const Scene& scene, std::size_t samples,
                                                   std::span<const std::array<double, 2>> eps) const {
  if (eps.size() != samples * scene.size()) throw std::invalid_argument("need one noise pair per (sample, actor)");
  ad::NoGradGuard no_grad;
  const SceneBatch b = batch(std::span<const Scene>(&scene, 1));
  const Tensor raw = head_forward(b);
  auto out = SceneSampleSet::for_scene(scene, samples);
  const std::size_t cols = raw.cols();
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t n = 0; n < scene.size(); ++n) {
      const auto& e = eps[s * scene.size() + n];
      constant_noise_fill(out, s, n, raw.values().subspan(n * cols, cols), e[0], e[1]);
    }
  return out;
}

// ---------------------------------------------------------------------------

AutoregressiveModel::AutoregressiveModel(const ModelConfig& cfg, std::uint64_t init_seed) : ForecastModel(cfg) {
  Rng rng(init_seed);
  const std::size_t h = cfg_.hidden_dim;
  actor_encoder_ = ActorEncoder(params_, "actor_encoder", cfg_, rng);
  social_ = nn::Linear(params_, "autoregressive.social", 2, h, rng);
  gru_ = nn::GruCell(params_, "autoregressive.gru", cfg_.actor_feat_dim + 4 + h, h, rng);
  out_ = nn::Mlp(params_, "autoregressive.out", {h, h, ad::kGaussianParams}, rng);
}

Tensor AutoregressiveModel::state_features(std::span<const geo::Vec2> state, std::span<const geo::Vec2> prev) const {
  std::vector<double> v;
  v.reserve(state.size() * 4);
  for (std::size_t r = 0; r < state.size(); ++r) {
    v.insert(v.end(), {state[r].x * cfg_.scales.position, state[r].y * cfg_.scales.position,
                       (state[r].x - prev[r].x) * cfg_.scales.delta, (state[r].y - prev[r].y) * cfg_.scales.delta});
  }
  return Tensor::from({state.size(), 4}, std::move(v));
}

Tensor AutoregressiveModel::social_features(const SceneBatch& batch, std::span<const geo::Vec2> state) const {
  const auto& g = batch.graph;
  if (g.edges() == 0) return Tensor::zeros({batch.rows, social_.out_dim()});
  std::vector<double> rel;
  rel.reserve(g.edges() * 2);
  for (std::size_t e = 0; e < g.edges(); ++e) {
    const std::size_t u = g.src[e], v = g.dst[e];
    const geo::Vec2 p = batch.poses[v].to_local(batch.poses[u].to_world(state[u]));
    rel.insert(rel.end(), {p.x * cfg_.scales.position, p.y * cfg_.scales.position});
  }
  const Tensor emb = ad::relu(social_(Tensor::from({g.edges(), 2}, std::move(rel))));
  return ad::segment_max(emb, g.dst, batch.rows);
}

Tensor AutoregressiveModel::step(const Tensor& h, const Tensor& x, const SceneBatch& batch,
                                 std::span<const geo::Vec2> state, std::span<const geo::Vec2> prev,
                                 Tensor& raw) const {
  const Tensor input = ad::concat_cols({x, state_features(state, prev), social_features(batch, state)});
  const Tensor next = gru_(h, input);
  raw = out_(next);
  return next;
}

LossParts AutoregressiveModel::teacher_forced_loss(const SceneBatch& batch, const Tensor& noise) const {
  if (batch.replicas != 1 || !batch.future.defined()) throw std::invalid_argument("loss needs a plain batch with futures");
  const std::size_t rows = batch.rows, horizon = batch.horizon;
  if (noise.rows() != rows || noise.cols() != 2 * horizon) throw ad::ShapeError("conditioning noise must be [rows x 2T]");
  const Tensor x = actor_encoder_(batch);
  const auto gt = batch.future.values();
  const auto nz = noise.values();
  const double alpha = cfg_.ar_noise_alpha;

  // Conditioning state before step t: the exact origin for t = 0, noisy ground truth afterwards.
  std::vector<geo::Vec2> state(rows);
  std::vector<geo::Vec2> prev = batch.last_past;

  Tensor h = Tensor::zeros({rows, cfg_.hidden_dim});
  std::vector<Tensor> raws;
  std::vector<double> targets(rows * 2 * horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    Tensor raw;
    h = step(h, x, batch, state, prev, raw);
    raws.push_back(raw);
    std::vector<geo::Vec2> next(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const geo::Vec2 y{gt[r * 2 * horizon + 2 * t], gt[r * 2 * horizon + 2 * t + 1]};
      targets[r * 2 * horizon + 2 * t] = y.x - state[r].x;
      targets[r * 2 * horizon + 2 * t + 1] = y.y - state[r].y;
      next[r] = {y.x + alpha * nz[r * 2 * horizon + 2 * t], y.y + alpha * nz[r * 2 * horizon + 2 * t + 1]};
    }
    prev = state;
    state = std::move(next);
  }
  const Tensor nll = ad::gaussian2d_nll(ad::concat_cols(raws), Tensor::from({rows, 2 * horizon}, std::move(targets)));
  const double inv = 1.0 / static_cast<double>(batch.scenes);
  return {ad::scale(nll, inv), nll.item() * inv, 0.0};
}

LossParts AutoregressiveModel::loss(const SceneBatch& batch, double, Rng& rng) const {
  std::vector<double> e(batch.rows * 2 * batch.horizon);
  for (auto& v : e) v = standard_normal(rng);
  return teacher_forced_loss(batch, Tensor::from({batch.rows, 2 * batch.horizon}, std::move(e)));
}

AutoregressiveModel::Rollout AutoregressiveModel::rollout(std::span<const Scene> scenes, std::size_t samples,
                                                          std::uint64_t seed, const StepHook& hook) const {
  if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
  ad::NoGradGuard no_grad;
  const SceneBatch b = batch(scenes, samples);
  const std::size_t rows = b.rows, horizon = cfg_.horizon;
  const Tensor x = ad::gather_rows(actor_encoder_(b), b.source);
  const Tensor noise = row_noise(b, seed, kAutoregressiveNoise, 2 * horizon);

  Rollout out;
  for (const auto& s : scenes) out.samples.push_back(SceneSampleSet::for_scene(s, samples));
  std::vector<geo::Vec2> state(rows), prev(rows);
  for (std::size_t r = 0; r < rows; ++r) prev[r] = b.last_past[b.source[r]];
  Tensor h = Tensor::zeros({rows, cfg_.hidden_dim});
  for (std::size_t t = 0; t < horizon; ++t) {
    Tensor raw;
    h = step(h, x, b, state, prev, raw);
    ++out.sequential_steps;
    const auto rv = raw.values();
    out.step_params.emplace_back(rv.begin(), rv.end());
    std::vector<geo::Vec2> next(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto g = ad::gaussian_from_raw(rv.data() + r * ad::kGaussianParams);
      const auto d = g.sample(noise.at(r, 2 * t), noise.at(r, 2 * t + 1));
      next[r] = {state[r].x + d[0], state[r].y + d[1]};
    }
    if (hook) hook(t, next);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t k = b.scene_of_row[r];
      out.samples[k].set(b.replica_of_row[r], b.source[r] - b.scene_offset[k], t, next[r]);
    }
    prev = state;
    state = std::move(next);
  }
  return out;
}

std::vector<SceneSampleSet> AutoregressiveModel::sample(std::span<const Scene> scenes, std::size_t samples,
                                                        std::uint64_t seed) const {
  return rollout(scenes, samples, seed).samples;
}

}  // namespace ilvm::model
