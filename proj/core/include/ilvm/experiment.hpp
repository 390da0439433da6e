#pragma once

// One JSON document describing a full run: model kind and config, data
// locations, training options, evaluation flags and the seed.

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ilvm/metrics.hpp"
#include "ilvm/model.hpp"
#include "ilvm/planner.hpp"
#include "ilvm/train.hpp"

namespace ilvm {

struct ExperimentConfig {
  std::string model_kind = "ilvm";
  model::ModelConfig model;
  model::TrainOptions train;
  std::string train_data;
  std::string val_data;
  std::string test_data;
  std::size_t eval_samples = 15;
  double eps_iou = 0.1;
  bool squared = false;
  std::size_t plan_samples = 50;
  plan::CostWeights plan_weights;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing fields keep defaults; throws std::invalid_argument on bad values.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
/// Hash of the canonical serialisation.
std::string experiment_hash(const ExperimentConfig& cfg);

}  // namespace ilvm
