#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/model.hpp"

namespace ilvm::model {

struct TrainOptions {
  std::int64_t steps = 2000;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double grad_clip = 10.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
  // Overrides the cyclic schedule when set.
  std::optional<double> fixed_beta;
};

nlohmann::json to_json(const TrainOptions& opts);
TrainOptions train_options_from_json(const nlohmann::json& j);

struct TrainRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double beta = 0.0;
  double grad_norm = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam over minibatches drawn from per-epoch shuffles of `scenes`. Everything
/// random derives from opts.seed, so equal seeds give identical parameters.
/// Throws DivergenceError when the loss or a gradient stops being finite.
std::vector<TrainRecord> train(ForecastModel& model, std::span<const Scene> scenes, const TrainOptions& opts,
                               const std::function<void(const TrainRecord&)>& on_step = {});

/// Mean loss parts over `scenes` with one posterior draw per scene.
TrainRecord evaluate_loss(const ForecastModel& model, std::span<const Scene> scenes, double beta, std::uint64_t seed,
                          std::size_t batch_size = 64);

std::string save_model(const std::filesystem::path& prefix, const ForecastModel& model,
                       const nlohmann::json& provenance = nlohmann::json::object());
std::unique_ptr<ForecastModel> load_model(const std::filesystem::path& prefix);

}  // namespace ilvm::model
