#pragma once

// Sampling-based ego planning: score a fixed lattice of candidate trajectories
// against forecast samples by Monte-Carlo expected cost and take the argmin.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/geometry.hpp"
#include "ilvm/samples.hpp"

namespace ilvm::plan {

struct LatticeOptions {
  std::vector<double> target_speeds = {0.0, 3.0, 6.0, 9.0, 12.0};  // m/s
  std::vector<double> lateral_offsets = {-2.0, 0.0, 2.0};          // m, reached at the horizon
  std::vector<double> accel_limits = {1.5, 3.0};                   // m/s^2 used to reach the target speed
  std::size_t horizon = 10;
  double dt = 0.5;
};

struct Candidate {
  std::vector<geo::Pose2> poses;  // T world poses, one per future step
  double target_speed = 0.0;
  double lateral_offset = 0.0;
  double accel_limit = 0.0;
};

struct CandidateSet {
  geo::Pose2 start;
  double start_speed = 0.0;
  double dt = 0.5;
  double length = 4.5;
  double width = 2.0;
  std::vector<Candidate> candidates;
};

/// Lattice over (target speed, lateral offset, accel limit), in that nesting order.
CandidateSet make_candidates(const geo::Pose2& start, double start_speed, double length, double width,
                             const LatticeOptions& opts = {});

struct CostWeights {
  double collision = 100.0;
  double lat_accel = 1.0;
  double jerk = 0.1;
  double progress = 1.0;
};

struct CostTerms {
  double collision_rate = 0.0;  // fraction of samples the candidate collides with
  double lat_accel = 0.0;       // sum of squared lateral accelerations
  double jerk = 0.0;            // sum of squared jerk magnitudes
  double progress = 0.0;        // arc length, m
  double total = 0.0;
};

/// Collision with sample s: the ego box overlaps (IoU > 0) some obstacle box at
/// some step. The ego actor, if given, is not an obstacle.
bool collides(const CandidateSet& set, const Candidate& c, const SceneSampleSet& samples, std::size_t s,
              std::optional<std::size_t> ego_actor, double stationary_step = 0.1);

CostTerms expected_cost(const CandidateSet& set, const Candidate& c, const SceneSampleSet& samples,
                        const CostWeights& w, std::optional<std::size_t> ego_actor = std::nullopt);

/// Comfort and progress terms only (no obstacles).
CostTerms comfort_terms(const CandidateSet& set, const Candidate& c);

struct PlanResult {
  std::size_t chosen = 0;
  std::vector<CostTerms> costs;
};

/// Totals within this fraction of the largest weighted-term magnitude count as
/// equal, so rounding noise between equivalent candidates cannot move the argmin
/// when all weights are rescaled.
inline constexpr double kTieTolerance = 1e-9;

/// Argmin of expected cost, ties (see kTieTolerance) to the lowest index.
PlanResult plan(const CandidateSet& set, const SceneSampleSet& samples, const CostWeights& w,
                std::optional<std::size_t> ego_actor = std::nullopt);

nlohmann::json to_json(const CostWeights& w);
CostWeights cost_weights_from_json(const nlohmann::json& j);

}  // namespace ilvm::plan
