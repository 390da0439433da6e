#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/geometry.hpp"
#include "ilvm/scene.hpp"

namespace ilvm {

/// S joint futures of one scene. Waypoints live in each actor's current frame.
struct SceneSampleSet {
  std::uint64_t scene_id = 0;
  std::size_t samples = 0;
  std::size_t actors = 0;
  std::size_t horizon = 0;
  std::vector<double> xy;  // [S][N][T][2]
  std::vector<geo::Pose2> poses;
  std::vector<double> lengths;
  std::vector<double> widths;
  std::vector<std::uint64_t> track_ids;

  /// Allocates zeroed storage and copies per-actor metadata from the scene.
  static SceneSampleSet for_scene(const Scene& scene, std::size_t samples);

  std::size_t index(std::size_t s, std::size_t n, std::size_t t) const {
    return ((s * actors + n) * horizon + t) * 2;
  }
  geo::Vec2 local(std::size_t s, std::size_t n, std::size_t t) const {
    const std::size_t i = index(s, n, t);
    return {xy[i], xy[i + 1]};
  }
  void set(std::size_t s, std::size_t n, std::size_t t, geo::Vec2 p) {
    const std::size_t i = index(s, n, t);
    xy[i] = p.x;
    xy[i + 1] = p.y;
  }
  geo::Vec2 world(std::size_t s, std::size_t n, std::size_t t) const { return poses[n].to_world(local(s, n, t)); }
  std::vector<geo::Vec2> local_track(std::size_t s, std::size_t n) const;
  std::vector<geo::Vec2> world_track(std::size_t s, std::size_t n) const;
};

/// Throws std::invalid_argument on inconsistent sizes or non-finite values.
void validate_samples(const SceneSampleSet& set);

nlohmann::json samples_to_json(const SceneSampleSet& set);
SceneSampleSet samples_from_json(const nlohmann::json& j);

/// A sample set whose S samples all equal the scene's ground truth.
SceneSampleSet ground_truth_samples(const Scene& scene, std::size_t samples = 1);

}  // namespace ilvm
