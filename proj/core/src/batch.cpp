#include "ilvm/batch.hpp"

#include <stdexcept>

namespace ilvm::model {

ActorGraph fully_connected(std::span<const geo::Pose2> poses, std::span<const std::size_t> group_sizes,
                           double position_scale) {
  ActorGraph g;
  g.nodes = poses.size();
  std::vector<double> rel;
  std::size_t begin = 0;
  for (std::size_t size : group_sizes) {
    if (begin + size > poses.size()) throw std::invalid_argument("graph groups exceed node count");
    for (std::size_t v = begin; v < begin + size; ++v) {
      for (std::size_t u = begin; u < begin + size; ++u) {
        if (u == v) continue;
        g.src.push_back(u);
        g.dst.push_back(v);
        const auto t = geo::relative_transform(poses[u], poses[v]);
        rel.insert(rel.end(), {t[0] * position_scale, t[1] * position_scale, t[2], t[3]});
      }
    }
    begin += size;
  }
  if (begin != poses.size()) throw std::invalid_argument("graph groups do not cover all nodes");
  g.relative = Tensor::from({g.src.size(), 4}, std::move(rel));
  return g;
}

std::vector<double> step_features(std::span<const geo::Vec2> traj, geo::Vec2 start, const FeatureScales& scales) {
  std::vector<double> out;
  out.reserve(traj.size() * 4);
  geo::Vec2 prev = start;
  for (const auto& p : traj) {
    out.insert(out.end(), {p.x * scales.position, p.y * scales.position, (p.x - prev.x) * scales.delta,
                           (p.y - prev.y) * scales.delta});
    prev = p;
  }
  return out;
}

SceneBatch make_batch(std::span<const Scene> scenes, std::size_t replicas, const FeatureScales& scales) {
  if (scenes.empty()) throw std::invalid_argument("empty scene batch");
  if (replicas == 0) throw std::invalid_argument("replica count must be positive");
  SceneBatch b;
  b.scenes = scenes.size();
  b.replicas = replicas;
  b.history = scenes.front().history();
  b.horizon = scenes.front().horizon();
  bool has_future = b.horizon > 0;
  for (const auto& s : scenes) {
    if (s.actors.empty()) throw std::invalid_argument("scene " + std::to_string(s.id) + " has no actors");
    b.scene_offset.push_back(b.base_rows);
    b.scene_ids.push_back(s.id);
    for (const auto& a : s.actors) {
      if (a.past.size() != b.history) throw std::invalid_argument("actor history length differs within batch");
      if (a.future.size() != b.horizon) has_future = false;
    }
    b.base_rows += s.actors.size();
  }
  b.scene_offset.push_back(b.base_rows);
  if (b.history == 0) throw std::invalid_argument("actors need at least one past waypoint");

  // Past steps, oldest first, followed by the current origin.
  const std::size_t steps = b.history + 1;
  std::vector<std::vector<double>> past(steps, std::vector<double>(b.base_rows * 4));
  std::vector<std::vector<double>> fut(has_future ? b.horizon : 0, std::vector<double>(b.base_rows * 4));
  std::vector<double> target(has_future ? b.base_rows * 2 * b.horizon : 0);
  std::size_t row = 0;
  for (const auto& s : scenes) {
    for (const auto& a : s.actors) {
      b.last_past.push_back(a.past.back());
      std::vector<geo::Vec2> seq = a.past;
      seq.push_back({0.0, 0.0});
      const auto feats = step_features(seq, seq.front(), scales);
      for (std::size_t k = 0; k < steps; ++k)
        for (std::size_t c = 0; c < 4; ++c) past[k][row * 4 + c] = feats[k * 4 + c];
      if (has_future) {
        const auto ff = step_features(a.future, {0.0, 0.0}, scales);
        for (std::size_t t = 0; t < b.horizon; ++t) {
          for (std::size_t c = 0; c < 4; ++c) fut[t][row * 4 + c] = ff[t * 4 + c];
          target[row * 2 * b.horizon + 2 * t] = a.future[t].x;
          target[row * 2 * b.horizon + 2 * t + 1] = a.future[t].y;
        }
      }
      ++row;
    }
  }
  for (auto& p : past) b.past_inputs.push_back(Tensor::from({b.base_rows, 4}, std::move(p)));
  for (auto& f : fut) b.future_inputs.push_back(Tensor::from({b.base_rows, 4}, std::move(f)));
  if (has_future) b.future = Tensor::from({b.base_rows, 2 * b.horizon}, std::move(target));

  std::vector<std::size_t> groups;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const auto& s = scenes[k];
    for (std::size_t r = 0; r < replicas; ++r) {
      groups.push_back(s.actors.size());
      for (std::size_t n = 0; n < s.actors.size(); ++n) {
        b.source.push_back(b.scene_offset[k] + n);
        b.scene_of_row.push_back(k);
        b.replica_of_row.push_back(r);
        b.poses.push_back(s.actors[n].pose);
        b.track_ids.push_back(s.actors[n].track_id);
      }
    }
  }
  b.rows = b.source.size();
  b.graph = fully_connected(b.poses, groups, scales.position);
  return b;
}

}  // namespace ilvm::model
