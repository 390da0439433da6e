#pragma once

// Scene-level sample-quality metrics. Every per-scene value treats a sample as
// a joint future of all actors; dataset values are means of per-scene values.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/samples.hpp"
#include "ilvm/scene.hpp"

namespace ilvm::metrics {

struct Displacement {
  double min_sade = 0.0;
  double mean_sade = 0.0;
  double min_sfde = 0.0;
  double mean_sfde = 0.0;
};

/// With `squared`, waypoint errors are squared distances instead of distances.
Displacement displacement_errors(const SceneSampleSet& samples, const Scene& gt, bool squared = false);

struct CollisionOptions {
  double eps_iou = 0.1;
  // Waypoint steps shorter than this (metres) keep the previous heading.
  double stationary_step = 0.1;
  // Number of future steps considered; all when unset.
  std::optional<std::size_t> horizon;
};

/// World-frame box heading of every waypoint of one sampled track, from
/// forward differences that start at the actor's current position.
std::vector<double> track_headings(const SceneSampleSet& samples, std::size_t s, std::size_t n,
                                   double stationary_step);

/// flags[s * N + n] is true when actor n overlaps another actor of sample s
/// with IoU above eps at some timestep.
std::vector<bool> collision_flags(const SceneSampleSet& samples, const CollisionOptions& opts = {});
double scene_collision_rate(const SceneSampleSet& samples, const CollisionOptions& opts = {});

struct HitRatePoint {
  double eps = 0.0;
  double rate = 0.0;
};

/// 0, 0.25, ..., 5 m.
std::vector<double> default_hit_sweep();

/// Fraction of (actor, sample) pairs whose error at step t is strictly below
/// eps. `detected` gates actors (all actors count as detected by default).
std::vector<HitRatePoint> hit_rate(const SceneSampleSet& samples, const Scene& gt, std::size_t t,
                                   std::span<const double> eps_sweep,
                                   const std::function<bool(std::size_t actor)>& detected = {});

struct TrackBreakdown {
  double min_sade_at = 0.0, mean_sade_at = 0.0, min_sade_ct = 0.0, mean_sade_ct = 0.0;
  double min_sfde_at = 0.0, mean_sfde_at = 0.0, min_sfde_ct = 0.0, mean_sfde_ct = 0.0;
};

/// Along-/cross-track absolute errors in the ground-truth heading frame,
/// aggregated like SADE/SFDE.
TrackBreakdown along_cross_breakdown(const SceneSampleSet& samples, const Scene& gt, double stationary_step = 0.1);

/// Mean Euclidean distance between corresponding waypoints of two samples.
double sample_distance(const SceneSampleSet& samples, std::size_t a, std::size_t b);
/// The two samples with the largest mean distance to all others, higher score
/// first, ties to the lower index. Needs S >= 2.
std::pair<std::size_t, std::size_t> most_distinct_pair(const SceneSampleSet& samples);

struct MetricOptions {
  bool squared = false;
  CollisionOptions collision;
  std::vector<double> hit_sweep = default_hit_sweep();
  std::optional<std::size_t> hit_step;  // last step when unset
};

struct MetricReport {
  std::size_t scenes = 0;
  std::size_t samples = 0;
  Displacement displacement;
  double scr = 0.0;
  std::vector<HitRatePoint> hit_rate;
  TrackBreakdown breakdown;
};

MetricReport evaluate(std::span<const SceneSampleSet> samples, std::span<const Scene> gt,
                      const MetricOptions& opts = {});

nlohmann::json to_json(const MetricReport& r);
/// Two-column metric,value table.
std::string to_csv(const MetricReport& r);

}  // namespace ilvm::metrics
