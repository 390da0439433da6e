#include "ilvm/samples.hpp"

#include <cmath>
#include <stdexcept>

namespace ilvm {

SceneSampleSet SceneSampleSet::for_scene(const Scene& scene, std::size_t samples) {
  SceneSampleSet out;
  out.scene_id = scene.id;
  out.samples = samples;
  out.actors = scene.actors.size();
  out.horizon = scene.horizon();
  out.xy.assign(samples * out.actors * out.horizon * 2, 0.0);
  for (const auto& a : scene.actors) {
    out.poses.push_back(a.pose);
    out.lengths.push_back(a.length);
    out.widths.push_back(a.width);
    out.track_ids.push_back(a.track_id);
  }
  return out;
}

std::vector<geo::Vec2> SceneSampleSet::local_track(std::size_t s, std::size_t n) const {
  std::vector<geo::Vec2> out(horizon);
  for (std::size_t t = 0; t < horizon; ++t) out[t] = local(s, n, t);
  return out;
}

std::vector<geo::Vec2> SceneSampleSet::world_track(std::size_t s, std::size_t n) const {
  std::vector<geo::Vec2> out(horizon);
  for (std::size_t t = 0; t < horizon; ++t) out[t] = world(s, n, t);
  return out;
}

void validate_samples(const SceneSampleSet& set) {
  if (set.xy.size() != set.samples * set.actors * set.horizon * 2) throw std::invalid_argument("sample storage size mismatch");
  if (set.poses.size() != set.actors || set.lengths.size() != set.actors || set.widths.size() != set.actors ||
      set.track_ids.size() != set.actors) {
    throw std::invalid_argument("sample metadata size mismatch");
  }
  for (double v : set.xy)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample waypoint");
}

nlohmann::json samples_to_json(const SceneSampleSet& set) {
  nlohmann::json actors = nlohmann::json::array();
  for (std::size_t n = 0; n < set.actors; ++n) {
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t s = 0; s < set.samples; ++s) {
      nlohmann::json traj = nlohmann::json::array();
      for (std::size_t t = 0; t < set.horizon; ++t) {
        const auto p = set.local(s, n, t);
        traj.push_back({p.x, p.y});
      }
      samples.push_back(std::move(traj));
    }
    actors.push_back({{"track_id", set.track_ids[n]},
                      {"pose", {{"x", set.poses[n].x}, {"y", set.poses[n].y}, {"heading", set.poses[n].heading}}},
                      {"box", {{"length", set.lengths[n]}, {"width", set.widths[n]}}},
                      {"samples", std::move(samples)}});
  }
  return {{"scene_id", set.scene_id}, {"samples", set.samples}, {"horizon", set.horizon}, {"actors", actors}};
}

SceneSampleSet samples_from_json(const nlohmann::json& j) {
  SceneSampleSet set;
  set.scene_id = j.at("scene_id").get<std::uint64_t>();
  set.samples = j.at("samples").get<std::size_t>();
  set.horizon = j.at("horizon").get<std::size_t>();
  const auto& actors = j.at("actors");
  set.actors = actors.size();
  set.xy.assign(set.samples * set.actors * set.horizon * 2, 0.0);
  for (std::size_t n = 0; n < set.actors; ++n) {
    const auto& a = actors[n];
    set.track_ids.push_back(a.at("track_id").get<std::uint64_t>());
    const auto& p = a.at("pose");
    set.poses.emplace_back(p.at("x").get<double>(), p.at("y").get<double>(), p.at("heading").get<double>());
    set.lengths.push_back(a.at("box").at("length").get<double>());
    set.widths.push_back(a.at("box").at("width").get<double>());
    const auto& samples = a.at("samples");
    if (samples.size() != set.samples) throw std::invalid_argument("actor sample count mismatch");
    for (std::size_t s = 0; s < set.samples; ++s) {
      if (samples[s].size() != set.horizon) throw std::invalid_argument("sample horizon mismatch");
      for (std::size_t t = 0; t < set.horizon; ++t) {
        set.set(s, n, t, {samples[s][t].at(0).get<double>(), samples[s][t].at(1).get<double>()});
      }
    }
  }
  validate_samples(set);
  return set;
}

SceneSampleSet ground_truth_samples(const Scene& scene, std::size_t samples) {
  auto set = SceneSampleSet::for_scene(scene, samples);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t n = 0; n < set.actors; ++n)
      for (std::size_t t = 0; t < set.horizon; ++t) set.set(s, n, t, scene.actors[n].future[t]);
  return set;
}

}  // namespace ilvm
