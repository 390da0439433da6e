#include "ilvm/scene.hpp"

#include <cmath>
#include <stdexcept>

namespace ilvm {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::car_follow: return "car_follow";
    case ScenarioKind::yield_go: return "yield_go";
    case ScenarioKind::turn_branch: return "turn_branch";
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario_kind(const std::string& name) {
  if (name == "car_follow") return ScenarioKind::car_follow;
  if (name == "yield_go") return ScenarioKind::yield_go;
  if (name == "turn_branch") return ScenarioKind::turn_branch;
  return std::nullopt;
}

void validate_scene(const Scene& scene) {
  if (scene.actors.empty()) throw std::invalid_argument("scene " + std::to_string(scene.id) + " has no actors");
  const std::size_t h = scene.history(), t = scene.horizon();
  auto finite = [](geo::Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); };
  for (const auto& a : scene.actors) {
    if (a.past.size() != h || a.future.size() != t) {
      throw std::invalid_argument("scene " + std::to_string(scene.id) + " has ragged trajectories");
    }
    if (!(a.length > 0.0 && a.width > 0.0)) throw std::invalid_argument("non-positive box extent");
    for (const auto& p : a.past)
      if (!finite(p)) throw std::invalid_argument("non-finite past waypoint");
    for (const auto& p : a.future)
      if (!finite(p)) throw std::invalid_argument("non-finite future waypoint");
  }
}

Scene permute_actors(const Scene& scene, const std::vector<std::size_t>& perm) {
  if (perm.size() != scene.actors.size()) throw std::invalid_argument("permutation size mismatch");
  Scene out = scene;
  for (std::size_t i = 0; i < perm.size(); ++i) out.actors[i] = scene.actors.at(perm[i]);
  return out;
}

}  // namespace ilvm
