#include "ilvm/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ilvm/checkpoint.hpp"
#include "ilvm/optim.hpp"

namespace ilvm::model {

nlohmann::json to_json(const TrainOptions& o) {
  nlohmann::json j = {{"steps", o.steps}, {"batch_size", o.batch_size}, {"lr", o.lr},
                      {"grad_clip", o.grad_clip}, {"seed", o.seed}};
  j["fixed_beta"] = o.fixed_beta ? nlohmann::json(*o.fixed_beta) : nlohmann::json(nullptr);
  return j;
}

TrainOptions train_options_from_json(const nlohmann::json& j) {
  TrainOptions o;
  o.steps = j.value("steps", o.steps);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.lr = j.value("lr", o.lr);
  o.grad_clip = j.value("grad_clip", o.grad_clip);
  o.seed = j.value("seed", o.seed);
  if (j.contains("fixed_beta") && !j["fixed_beta"].is_null()) o.fixed_beta = j["fixed_beta"].get<double>();
  if (o.steps < 0 || o.batch_size == 0 || !(o.lr > 0.0)) throw std::invalid_argument("invalid training options");
  return o;
}

std::vector<TrainRecord> train(ForecastModel& model, std::span<const Scene> scenes, const TrainOptions& opts,
                               const std::function<void(const TrainRecord&)>& on_step) {
  if (scenes.empty()) throw std::invalid_argument("training set is empty");
  auto& params = model.parameters();
  optim::Adam adam(params, {.lr = opts.lr});
  const std::size_t bs = std::min(opts.batch_size, scenes.size());

  std::vector<std::size_t> order(scenes.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  std::vector<TrainRecord> curve;
  curve.reserve(static_cast<std::size_t>(opts.steps));
  std::vector<Scene> batch_scenes;
  for (std::int64_t step = 0; step < opts.steps; ++step) {
    batch_scenes.clear();
    while (batch_scenes.size() < bs) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle(derive_seed(opts.seed, {0x5eed, epoch++}));
        std::shuffle(order.begin(), order.end(), shuffle);
        cursor = 0;
      }
      batch_scenes.push_back(scenes[order[cursor++]]);
    }
    TrainRecord rec;
    rec.step = step;
    rec.beta = opts.fixed_beta ? *opts.fixed_beta : beta_schedule(model.config(), step);
    Rng noise(derive_seed(opts.seed, {0x1a7e, static_cast<std::uint64_t>(step)}));

    params.zero_grad();
    LossParts parts;
    try {
      parts = model.loss(model.batch(batch_scenes), rec.beta, noise);
      rec.loss = parts.loss.item();
      parts.loss.backward();
    } catch (const ad::NonFiniteError& e) {
      throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    rec.recon = parts.recon;
    rec.kl = parts.kl;
    rec.grad_norm = optim::clip_grad_norm(params, opts.grad_clip > 0.0 ? opts.grad_clip : std::numeric_limits<double>::infinity());
    if (!std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm)) {
      throw DivergenceError("training diverged at step " + std::to_string(step) + ": loss " + std::to_string(rec.loss) +
                            ", gradient norm " + std::to_string(rec.grad_norm));
    }
    adam.step();
    curve.push_back(rec);
    if (on_step) on_step(rec);
  }
  return curve;
}

TrainRecord evaluate_loss(const ForecastModel& model, std::span<const Scene> scenes, double beta, std::uint64_t seed,
                          std::size_t batch_size) {
  if (scenes.empty()) throw std::invalid_argument("no scenes to evaluate");
  ad::NoGradGuard no_grad;
  TrainRecord total;
  total.beta = beta;
  for (std::size_t begin = 0; begin < scenes.size(); begin += batch_size) {
    const auto chunk = scenes.subspan(begin, std::min(batch_size, scenes.size() - begin));
    Rng noise(derive_seed(seed, {0xe7a1, begin}));
    const auto parts = model.loss(model.batch(chunk), beta, noise);
    const double w = static_cast<double>(chunk.size());
    total.loss += parts.loss.item() * w;
    total.recon += parts.recon * w;
    total.kl += parts.kl * w;
  }
  const double n = static_cast<double>(scenes.size());
  total.loss /= n;
  total.recon /= n;
  total.kl /= n;
  return total;
}

std::string save_model(const std::filesystem::path& prefix, const ForecastModel& model,
                       const nlohmann::json& provenance) {
  return save_checkpoint(prefix, model.parameters(), model.kind(), to_json(model.config()), provenance);
}

std::unique_ptr<ForecastModel> load_model(const std::filesystem::path& prefix) {
  const auto info = read_checkpoint_info(prefix);
  auto model = make_model(info.model_kind, model_config_from_json(info.config), 0);
  load_checkpoint(prefix, model->parameters());
  return model;
}

}  // namespace ilvm::model
