#pragma once

// JSON-lines scene datasets. Each file starts with one header record followed
// by one scene record per line. Field-by-field schema: docs/dataset_format.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/scene.hpp"
#include "ilvm/scenegen.hpp"

namespace ilvm::data {

inline constexpr const char* kSceneFormat = "ilvm-scenes/1";

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::map<ScenarioKind, std::size_t> counts;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  scenegen::GeneratorParams generator;
};

nlohmann::json to_json(const DatasetManifest& m);
/// Throws std::invalid_argument on unknown kinds or bad split fractions.
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct DatasetSplits {
  std::vector<Scene> train;
  std::vector<Scene> val;
  std::vector<Scene> test;
};

/// Scene i is generated from its own stream derived from (seed, i); split
/// membership comes from a seeded shuffle of the ids.
DatasetSplits generate_splits(const DatasetManifest& manifest);

/// Writes train.jsonl, val.jsonl and test.jsonl into `dir`.
void build_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir,
                   const nlohmann::json& provenance = nlohmann::json::object());

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                  const nlohmann::json& header_extra = nlohmann::json::object());

struct SceneFile {
  nlohmann::json header;
  std::vector<Scene> scenes;
};
SceneFile read_scenes(const std::filesystem::path& path);

}  // namespace ilvm::data
