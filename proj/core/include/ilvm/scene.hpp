#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ilvm/geometry.hpp"

namespace ilvm {

enum class ScenarioKind { car_follow, yield_go, turn_branch };

std::string to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(const std::string& name);

struct Actor {
  std::uint64_t track_id = 0;
  geo::Pose2 pose;  // world frame, current time
  double length = 4.5;
  double width = 2.0;
  std::vector<geo::Vec2> past;    // H waypoints, oldest first, actor frame
  std::vector<geo::Vec2> future;  // T waypoints, actor frame

  geo::OrientedBox box_at(const geo::Pose2& world_pose) const { return {world_pose, length, width}; }
};

struct Scene {
  std::uint64_t id = 0;
  ScenarioKind kind = ScenarioKind::car_follow;
  int mode_label = 0;
  double dt = 0.5;
  std::vector<Actor> actors;

  std::size_t size() const { return actors.size(); }
  std::size_t history() const { return actors.empty() ? 0 : actors.front().past.size(); }
  std::size_t horizon() const { return actors.empty() ? 0 : actors.front().future.size(); }
};

/// Throws std::invalid_argument if the scene is empty, has ragged
/// trajectories or non-finite values.
void validate_scene(const Scene& scene);

/// Applies `perm` (new index -> old index) to the actor list.
Scene permute_actors(const Scene& scene, const std::vector<std::size_t>& perm);

}  // namespace ilvm
