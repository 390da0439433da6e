#include "ilvm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ilvm/metrics.hpp"

namespace ilvm::plan {
namespace {

// Quintic blend with zero slope and curvature at both ends.
double blend(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double blend_rate(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }

std::vector<geo::Vec2> positions(const CandidateSet& set, const Candidate& c) {
  std::vector<geo::Vec2> p;
  p.reserve(c.poses.size() + 1);
  p.push_back(set.start.position());
  for (const auto& pose : c.poses) p.push_back(pose.position());
  return p;
}

}  // namespace

CandidateSet make_candidates(const geo::Pose2& start, double start_speed, double length, double width,
                             const LatticeOptions& opts) {
  if (opts.horizon < 1 || !(opts.dt > 0.0)) throw std::invalid_argument("lattice needs a positive horizon and dt");
  if (opts.target_speeds.empty() || opts.lateral_offsets.empty() || opts.accel_limits.empty()) {
    throw std::invalid_argument("empty lattice axis");
  }
  CandidateSet set;
  set.start = start;
  set.start_speed = start_speed;
  set.dt = opts.dt;
  set.length = length;
  set.width = width;
  const double total = opts.dt * static_cast<double>(opts.horizon);
  for (double v_target : opts.target_speeds) {
    for (double offset : opts.lateral_offsets) {
      for (double a_max : opts.accel_limits) {
        if (v_target < 0.0 || !(a_max > 0.0)) throw std::invalid_argument("invalid lattice values");
        Candidate c{{}, v_target, offset, a_max};
        // Speed ramps linearly to the target, then holds; s(t) is its exact integral.
        const double dv = v_target - start_speed;
        const double t_ramp = std::abs(dv) / a_max;
        const double a = dv >= 0.0 ? a_max : -a_max;
        for (std::size_t k = 1; k <= opts.horizon; ++k) {
          const double t = opts.dt * static_cast<double>(k);
          const double tr = std::min(t, t_ramp);
          const double s = start_speed * tr + 0.5 * a * tr * tr + v_target * (t - tr);
          const double v = start_speed + a * tr;
          const double u = t / total;
          const double d = offset * blend(u);
          const double d_rate = offset * blend_rate(u) / total;
          const double heading = (v > 1e-6 || std::abs(d_rate) > 1e-6) ? std::atan2(d_rate, v) : 0.0;
          c.poses.push_back(start.compose(geo::Pose2(s, d, heading)));
        }
        set.candidates.push_back(std::move(c));
      }
    }
  }
  return set;
}

bool collides(const CandidateSet& set, const Candidate& c, const SceneSampleSet& samples, std::size_t s,
              std::optional<std::size_t> ego_actor, double stationary_step) {
  const std::size_t T = std::min(c.poses.size(), samples.horizon);
  for (std::size_t n = 0; n < samples.actors; ++n) {
    if (ego_actor && *ego_actor == n) continue;
    const auto headings = metrics::track_headings(samples, s, n, stationary_step);
    for (std::size_t t = 0; t < T; ++t) {
      const geo::OrientedBox ego{c.poses[t], set.length, set.width};
      const auto p = samples.world(s, n, t);
      const geo::OrientedBox other{geo::Pose2(p.x, p.y, headings[t]), samples.lengths[n], samples.widths[n]};
      if (geo::obb_iou(ego, other) > 0.0) return true;
    }
  }
  return false;
}

CostTerms comfort_terms(const CandidateSet& set, const Candidate& c) {
  const auto p = positions(set, c);
  const double dt = set.dt;
  std::vector<geo::Vec2> vel, acc;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) vel.push_back((1.0 / dt) * (p[k + 1] - p[k]));
  for (std::size_t k = 0; k + 1 < vel.size(); ++k) acc.push_back((1.0 / dt) * (vel[k + 1] - vel[k]));
  CostTerms terms;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const double speed = geo::norm(vel[k]);
    if (speed < 1e-9) continue;
    const double lat = geo::cross((1.0 / speed) * vel[k], acc[k]);
    terms.lat_accel += lat * lat;
  }
  for (std::size_t k = 0; k + 1 < acc.size(); ++k) {
    const geo::Vec2 j = (1.0 / dt) * (acc[k + 1] - acc[k]);
    terms.jerk += geo::dot(j, j);
  }
  for (std::size_t k = 0; k + 1 < p.size(); ++k) terms.progress += geo::norm(p[k + 1] - p[k]);
  return terms;
}

CostTerms expected_cost(const CandidateSet& set, const Candidate& c, const SceneSampleSet& samples,
                        const CostWeights& w, std::optional<std::size_t> ego_actor) {
  CostTerms terms = comfort_terms(set, c);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples.samples; ++s) hits += collides(set, c, samples, s, ego_actor) ? 1 : 0;
  terms.collision_rate = samples.samples == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(samples.samples);
  terms.total = w.collision * terms.collision_rate + w.lat_accel * terms.lat_accel + w.jerk * terms.jerk -
                w.progress * terms.progress;
  return terms;
}

PlanResult plan(const CandidateSet& set, const SceneSampleSet& samples, const CostWeights& w,
                std::optional<std::size_t> ego_actor) {
  if (set.candidates.empty()) throw std::invalid_argument("empty candidate set");
  PlanResult r;
  double lowest = std::numeric_limits<double>::infinity(), scale = 0.0;
  for (const auto& c : set.candidates) {
    const auto& t = r.costs.emplace_back(expected_cost(set, c, samples, w, ego_actor));
    lowest = std::min(lowest, t.total);
    scale = std::max({scale, std::abs(w.collision * t.collision_rate), std::abs(w.lat_accel * t.lat_accel),
                      std::abs(w.jerk * t.jerk), std::abs(w.progress * t.progress)});
  }
  while (r.costs[r.chosen].total > lowest + kTieTolerance * scale) ++r.chosen;
  return r;
}

nlohmann::json to_json(const CostWeights& w) {
  return {{"collision", w.collision}, {"lat_accel", w.lat_accel}, {"jerk", w.jerk}, {"progress", w.progress}};
}

CostWeights cost_weights_from_json(const nlohmann::json& j) {
  CostWeights w;
  w.collision = j.value("collision", w.collision);
  w.lat_accel = j.value("lat_accel", w.lat_accel);
  w.jerk = j.value("jerk", w.jerk);
  w.progress = j.value("progress", w.progress);
  if (w.collision < 0 || w.lat_accel < 0 || w.jerk < 0 || w.progress < 0) {
    throw std::invalid_argument("cost weights must be non-negative");
  }
  if (w.collision == 0 && w.lat_accel == 0 && w.jerk == 0 && w.progress == 0) {
    throw std::invalid_argument("cost weights must not all be zero");
  }
  return w;
}

}  // namespace ilvm::plan
