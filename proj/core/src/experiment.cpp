#include "ilvm/experiment.hpp"

#include <stdexcept>

#include "ilvm/checkpoint.hpp"

namespace ilvm {

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"model_kind", c.model_kind},
          {"model", model::to_json(c.model)},
          {"train", model::to_json(c.train)},
          {"data", {{"train", c.train_data}, {"val", c.val_data}, {"test", c.test_data}}},
          {"eval", {{"samples", c.eval_samples}, {"eps_iou", c.eps_iou}, {"squared", c.squared}}},
          {"plan", {{"samples", c.plan_samples}, {"weights", plan::to_json(c.plan_weights)}}},
          {"seed", c.seed}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.model_kind = j.value("model_kind", c.model_kind);
  if (!model::is_model_kind(c.model_kind)) throw std::invalid_argument("unknown model kind '" + c.model_kind + "'");
  if (j.contains("model")) c.model = model::model_config_from_json(j["model"]);
  if (j.contains("train")) c.train = model::train_options_from_json(j["train"]);
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.train_data = d.value("train", c.train_data);
    c.val_data = d.value("val", c.val_data);
    c.test_data = d.value("test", c.test_data);
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    c.eval_samples = e.value("samples", c.eval_samples);
    c.eps_iou = e.value("eps_iou", c.eps_iou);
    c.squared = e.value("squared", c.squared);
  }
  if (j.contains("plan")) {
    c.plan_samples = j["plan"].value("samples", c.plan_samples);
    if (j["plan"].contains("weights")) c.plan_weights = plan::cost_weights_from_json(j["plan"]["weights"]);
  }
  c.seed = j.value("seed", c.seed);
  if (c.eval_samples < 1 || c.plan_samples < 1) throw std::invalid_argument("sample counts must be at least 1");
  if (c.eps_iou < 0.0 || c.eps_iou >= 1.0) throw std::invalid_argument("eps_iou must lie in [0, 1)");
  return c;
}

std::string experiment_hash(const ExperimentConfig& cfg) { return config_hash(to_json(cfg)); }

}  // namespace ilvm
