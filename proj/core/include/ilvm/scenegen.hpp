#pragma once

// Synthetic interacting-traffic scenes with known joint modes.
//
//  car_follow   two cars in one lane; the leader cruises (mode 0) or brakes
//               (mode 1) and the follower copies its speed profile.
//  yield_go     perpendicular approach lanes crossing at the origin, both cars
//               arriving together; exactly one goes. Mode 0: actor 0 goes and
//               actor 1 yields. Mode 1: the reverse.
//  turn_branch  a car reaching an intersection goes straight (0), turns left
//               (1) or right (2); a follower keeps going straight.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ilvm/geometry.hpp"
#include "ilvm/rng.hpp"
#include "ilvm/scene.hpp"

namespace ilvm::scenegen {

struct GeneratorParams {
  double dt = 0.5;
  std::size_t history = 6;
  std::size_t horizon = 10;
  double box_length = 4.5;
  double box_width = 2.0;
  // Probability of mode 1 for the two-outcome scenarios.
  double mode_probability = 0.5;
  double max_accel = 4.0;
  double max_speed = 15.0;
  // Threshold used to decide that the counterfactual joint outcome collides.
  double collision_iou = 0.1;
  int max_attempts = 200;
};

class InfeasibleParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Deterministic given the rng state.
Scene generate(ScenarioKind kind, const GeneratorParams& params, Rng& rng, std::uint64_t id = 0);

/// Both joint outcomes of one yield_go draw. The generator emits one of them;
/// overlaying the two "go" futures is the collision it avoids.
struct YieldGoOutcomes {
  Scene actor0_goes;  // mode 0
  Scene actor1_goes;  // mode 1
};
YieldGoOutcomes yield_go_outcomes(const GeneratorParams& params, Rng& rng, std::uint64_t id = 0);

/// Index of the actor that passes the crossing point of the two current
/// heading lines first (0 -> mode 0, 1 -> mode 1). Futures are in each actor's
/// own frame. If neither crosses, the one with more progress wins.
int classify_yield_go(const geo::Pose2& a, const geo::Pose2& b, std::span<const geo::Vec2> a_future,
                      std::span<const geo::Vec2> b_future);

struct KinematicsReport {
  double max_accel = 0.0;    // m/s^2, from second differences of world positions
  double max_step = 0.0;     // m per dt
  double min_speed = 0.0;    // m/s, from forward differences
  double max_iou = 0.0;      // over all actor pairs and all timesteps
};

/// Past, current and future world positions of an actor, oldest first.
std::vector<geo::Vec2> world_track(const Actor& actor);
KinematicsReport check_kinematics(const Scene& scene);

}  // namespace ilvm::scenegen
