#pragma once

// Packs several scenes into one block-diagonal actor graph so a single forward
// pass covers a whole minibatch (or S replicas of one scene when sampling).
// Rows are ordered scene-major, then replica, then actor.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ilvm/geometry.hpp"
#include "ilvm/scene.hpp"
#include "ilvm/tensor.hpp"

namespace ilvm::model {

using ad::Tensor;

struct FeatureScales {
  double position = 0.1;  // applied to positions in actor frames
  double delta = 0.5;     // applied to per-step displacements
};

/// Ordered edges u -> v between all distinct rows of each group.
struct ActorGraph {
  std::size_t nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  Tensor relative;  // [E x 4]: dx, dy (scaled), sin, cos of v seen from u

  std::size_t edges() const { return src.size(); }
};

/// Groups are consecutive row ranges of the given sizes.
ActorGraph fully_connected(std::span<const geo::Pose2> poses, std::span<const std::size_t> group_sizes,
                           double position_scale);

struct SceneBatch {
  std::size_t scenes = 0;
  std::size_t replicas = 1;
  std::size_t base_rows = 0;  // actors over all scenes
  std::size_t rows = 0;       // base_rows * replicas
  std::size_t history = 0;
  std::size_t horizon = 0;

  std::vector<std::size_t> scene_offset;  // first base row of each scene, plus a final sentinel
  std::vector<std::size_t> source;        // replicated row -> base row
  std::vector<std::size_t> scene_of_row;  // replicated row -> scene index
  std::vector<std::size_t> replica_of_row;
  std::vector<geo::Pose2> poses;          // per replicated row
  std::vector<std::uint64_t> track_ids;   // per replicated row
  std::vector<std::uint64_t> scene_ids;   // per scene

  std::vector<geo::Vec2> last_past;     // per base row, most recent past waypoint
  std::vector<Tensor> past_inputs;    // H+1 steps of [base_rows x 4], last step is the current origin
  std::vector<Tensor> future_inputs;  // T steps of [base_rows x 4]
  Tensor future;                      // [base_rows x 2T] ground truth in metres, actor frames
  ActorGraph graph;                   // over replicated rows
};

/// Ground-truth futures are packed when every actor has a full horizon of
/// `horizon` waypoints; otherwise `future` stays undefined.
SceneBatch make_batch(std::span<const Scene> scenes, std::size_t replicas = 1, const FeatureScales& scales = {});

/// Step inputs [p * position, (p - p_prev) * delta] for one trajectory that
/// starts from `start`.
std::vector<double> step_features(std::span<const geo::Vec2> traj, geo::Vec2 start, const FeatureScales& scales);

}  // namespace ilvm::model
