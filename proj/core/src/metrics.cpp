#include "ilvm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ilvm::metrics {
namespace {

void check_pair(const SceneSampleSet& samples, const Scene& gt) {
  if (samples.samples == 0) throw std::invalid_argument("empty sample set");
  if (samples.actors != gt.size() || samples.horizon != gt.horizon()) {
    throw std::invalid_argument("sample set does not match scene " + std::to_string(gt.id));
  }
}

geo::Vec2 gt_world(const Scene& gt, std::size_t n, std::size_t t) {
  return gt.actors[n].pose.to_world(gt.actors[n].future[t]);
}

std::vector<double> headings_from(const geo::Pose2& pose, const std::vector<geo::Vec2>& future,
                                  double stationary_step) {
  std::vector<geo::Vec2> pts;
  pts.reserve(future.size() + 1);
  pts.push_back(pose.position());
  for (const auto& p : future) pts.push_back(pose.to_world(p));
  auto h = geo::heading_by_finite_difference(pts, pose.heading, stationary_step);
  return {h.begin() + 1, h.end()};
}

}  // namespace

Displacement displacement_errors(const SceneSampleSet& samples, const Scene& gt, bool squared) {
  check_pair(samples, gt);
  const std::size_t S = samples.samples, N = samples.actors, T = samples.horizon;
  Displacement d;
  d.min_sade = d.min_sfde = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < S; ++s) {
    double ade = 0.0, fde = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t t = 0; t < T; ++t) {
        const geo::Vec2 e = samples.world(s, n, t) - gt_world(gt, n, t);
        const double v = squared ? geo::dot(e, e) : geo::norm(e);
        ade += v;
        if (t + 1 == T) fde += v;
      }
    }
    ade /= static_cast<double>(N * T);
    fde /= static_cast<double>(N);
    d.min_sade = std::min(d.min_sade, ade);
    d.min_sfde = std::min(d.min_sfde, fde);
    d.mean_sade += ade;
    d.mean_sfde += fde;
  }
  d.mean_sade /= static_cast<double>(S);
  d.mean_sfde /= static_cast<double>(S);
  return d;
}

std::vector<double> track_headings(const SceneSampleSet& samples, std::size_t s, std::size_t n,
                                   double stationary_step) {
  return headings_from(samples.poses[n], samples.local_track(s, n), stationary_step);
}

std::vector<bool> collision_flags(const SceneSampleSet& samples, const CollisionOptions& opts) {
  const std::size_t S = samples.samples, N = samples.actors;
  const std::size_t T = std::min(samples.horizon, opts.horizon.value_or(samples.horizon));
  std::vector<bool> flags(S * N, false);
  if (samples.horizon < 1) return flags;
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<std::vector<geo::OrientedBox>> boxes(N);
    for (std::size_t n = 0; n < N; ++n) {
      const auto headings = track_headings(samples, s, n, opts.stationary_step);
      for (std::size_t t = 0; t < T; ++t) {
        const auto p = samples.world(s, n, t);
        boxes[n].push_back({geo::Pose2(p.x, p.y, headings[t]), samples.lengths[n], samples.widths[n]});
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = i + 1; j < N; ++j) {
        for (std::size_t t = 0; t < T; ++t) {
          if (geo::obb_iou(boxes[i][t], boxes[j][t]) > opts.eps_iou) {
            flags[s * N + i] = flags[s * N + j] = true;
            break;
          }
        }
      }
    }
  }
  return flags;
}

double scene_collision_rate(const SceneSampleSet& samples, const CollisionOptions& opts) {
  if (samples.samples == 0 || samples.actors == 0) throw std::invalid_argument("empty sample set");
  const auto flags = collision_flags(samples, opts);
  const auto hits = std::count(flags.begin(), flags.end(), true);
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

std::vector<double> default_hit_sweep() {
  std::vector<double> eps;
  for (int k = 0; k <= 20; ++k) eps.push_back(0.25 * k);
  return eps;
}

std::vector<HitRatePoint> hit_rate(const SceneSampleSet& samples, const Scene& gt, std::size_t t,
                                   std::span<const double> eps_sweep,
                                   const std::function<bool(std::size_t)>& detected) {
  check_pair(samples, gt);
  if (t >= samples.horizon) throw std::out_of_range("hit-rate step " + std::to_string(t) + " beyond horizon");
  std::vector<double> errors;
  errors.reserve(samples.samples * samples.actors);
  for (std::size_t s = 0; s < samples.samples; ++s)
    for (std::size_t n = 0; n < samples.actors; ++n) {
      const bool det = !detected || detected(n);
      errors.push_back(det ? geo::norm(samples.world(s, n, t) - gt_world(gt, n, t))
                           : std::numeric_limits<double>::infinity());
    }
  std::vector<HitRatePoint> curve;
  for (double eps : eps_sweep) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [eps](double e) { return e < eps; });
    curve.push_back({eps, static_cast<double>(hits) / static_cast<double>(errors.size())});
  }
  return curve;
}

TrackBreakdown along_cross_breakdown(const SceneSampleSet& samples, const Scene& gt, double stationary_step) {
  check_pair(samples, gt);
  const std::size_t S = samples.samples, N = samples.actors, T = samples.horizon;
  std::vector<std::vector<double>> gt_heading(N);
  for (std::size_t n = 0; n < N; ++n) gt_heading[n] = headings_from(gt.actors[n].pose, gt.actors[n].future, stationary_step);
  TrackBreakdown b;
  const double inf = std::numeric_limits<double>::infinity();
  b.min_sade_at = b.min_sade_ct = b.min_sfde_at = b.min_sfde_ct = inf;
  for (std::size_t s = 0; s < S; ++s) {
    double at = 0.0, ct = 0.0, fat = 0.0, fct = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto e = geo::along_cross_error(samples.world(s, n, t), gt_world(gt, n, t), gt_heading[n][t]);
        at += std::abs(e.along);
        ct += std::abs(e.cross);
        if (t + 1 == T) {
          fat += std::abs(e.along);
          fct += std::abs(e.cross);
        }
      }
    }
    at /= static_cast<double>(N * T);
    ct /= static_cast<double>(N * T);
    fat /= static_cast<double>(N);
    fct /= static_cast<double>(N);
    b.min_sade_at = std::min(b.min_sade_at, at);
    b.min_sade_ct = std::min(b.min_sade_ct, ct);
    b.min_sfde_at = std::min(b.min_sfde_at, fat);
    b.min_sfde_ct = std::min(b.min_sfde_ct, fct);
    b.mean_sade_at += at;
    b.mean_sade_ct += ct;
    b.mean_sfde_at += fat;
    b.mean_sfde_ct += fct;
  }
  const double inv = 1.0 / static_cast<double>(S);
  b.mean_sade_at *= inv;
  b.mean_sade_ct *= inv;
  b.mean_sfde_at *= inv;
  b.mean_sfde_ct *= inv;
  return b;
}

double sample_distance(const SceneSampleSet& samples, std::size_t a, std::size_t b) {
  double total = 0.0;
  for (std::size_t n = 0; n < samples.actors; ++n)
    for (std::size_t t = 0; t < samples.horizon; ++t) total += geo::norm(samples.local(a, n, t) - samples.local(b, n, t));
  return total / static_cast<double>(samples.actors * samples.horizon);
}

std::pair<std::size_t, std::size_t> most_distinct_pair(const SceneSampleSet& samples) {
  const std::size_t S = samples.samples;
  if (S < 2) throw std::invalid_argument("most_distinct_pair needs at least two samples");
  std::vector<double> score(S, 0.0);
  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t b = a + 1; b < S; ++b) {
      const double d = sample_distance(samples, a, b);
      score[a] += d;
      score[b] += d;
    }
  std::vector<std::size_t> order(S);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return {order[0], order[1]};
}

MetricReport evaluate(std::span<const SceneSampleSet> samples, std::span<const Scene> gt, const MetricOptions& opts) {
  if (samples.size() != gt.size()) throw std::invalid_argument("sample sets and scenes differ in count");
  if (samples.empty()) throw std::invalid_argument("nothing to evaluate");
  MetricReport r;
  r.scenes = gt.size();
  r.samples = samples.front().samples;
  for (double e : opts.hit_sweep) r.hit_rate.push_back({e, 0.0});
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (samples[k].scene_id != gt[k].id) {
      throw std::invalid_argument("sample set for scene " + std::to_string(samples[k].scene_id) + " paired with scene " +
                                  std::to_string(gt[k].id));
    }
    const auto d = displacement_errors(samples[k], gt[k], opts.squared);
    r.displacement.min_sade += d.min_sade;
    r.displacement.mean_sade += d.mean_sade;
    r.displacement.min_sfde += d.min_sfde;
    r.displacement.mean_sfde += d.mean_sfde;
    r.scr += scene_collision_rate(samples[k], opts.collision);
    const std::size_t t = opts.hit_step.value_or(gt[k].horizon() - 1);
    const auto curve = hit_rate(samples[k], gt[k], t, opts.hit_sweep);
    for (std::size_t i = 0; i < curve.size(); ++i) r.hit_rate[i].rate += curve[i].rate;
    const auto b = along_cross_breakdown(samples[k], gt[k], opts.collision.stationary_step);
    r.breakdown.min_sade_at += b.min_sade_at;
    r.breakdown.mean_sade_at += b.mean_sade_at;
    r.breakdown.min_sade_ct += b.min_sade_ct;
    r.breakdown.mean_sade_ct += b.mean_sade_ct;
    r.breakdown.min_sfde_at += b.min_sfde_at;
    r.breakdown.mean_sfde_at += b.mean_sfde_at;
    r.breakdown.min_sfde_ct += b.min_sfde_ct;
    r.breakdown.mean_sfde_ct += b.mean_sfde_ct;
  }
  const double inv = 1.0 / static_cast<double>(gt.size());
  for (double* v : {&r.displacement.min_sade, &r.displacement.mean_sade, &r.displacement.min_sfde,
                    &r.displacement.mean_sfde, &r.scr, &r.breakdown.min_sade_at, &r.breakdown.mean_sade_at,
                    &r.breakdown.min_sade_ct, &r.breakdown.mean_sade_ct, &r.breakdown.min_sfde_at,
                    &r.breakdown.mean_sfde_at, &r.breakdown.min_sfde_ct, &r.breakdown.mean_sfde_ct}) {
    *v *= inv;
  }
  for (auto& p : r.hit_rate) p.rate *= inv;
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.hit_rate) curve.push_back({{"eps", p.eps}, {"rate", p.rate}});
  const auto& b = r.breakdown;
  return {{"scenes", r.scenes},
          {"samples", r.samples},
          {"min_sade", r.displacement.min_sade},
          {"mean_sade", r.displacement.mean_sade},
          {"min_sfde", r.displacement.min_sfde},
          {"mean_sfde", r.displacement.mean_sfde},
          {"scr", r.scr},
          {"hit_rate", curve},
          {"along_cross",
           {{"min_sade_at", b.min_sade_at},
            {"mean_sade_at", b.mean_sade_at},
            {"min_sade_ct", b.min_sade_ct},
            {"mean_sade_ct", b.mean_sade_ct},
            {"min_sfde_at", b.min_sfde_at},
            {"mean_sfde_at", b.mean_sfde_at},
            {"min_sfde_ct", b.min_sfde_ct},
            {"mean_sfde_ct", b.mean_sfde_ct}}}};
}

std::string to_csv(const MetricReport& r) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "metric,value\n";
  out << "scenes," << r.scenes << "\nsamples," << r.samples << "\n";
  out << "min_sade," << r.displacement.min_sade << "\nmean_sade," << r.displacement.mean_sade << "\n";
  out << "min_sfde," << r.displacement.min_sfde << "\nmean_sfde," << r.displacement.mean_sfde << "\n";
  out << "scr," << r.scr << "\n";
  const auto& b = r.breakdown;
  out << "min_sade_at," << b.min_sade_at << "\nmean_sade_at," << b.mean_sade_at << "\n";
  out << "min_sade_ct," << b.min_sade_ct << "\nmean_sade_ct," << b.mean_sade_ct << "\n";
  out << "min_sfde_at," << b.min_sfde_at << "\nmean_sfde_at," << b.mean_sfde_at << "\n";
  out << "min_sfde_ct," << b.min_sfde_ct << "\nmean_sfde_ct," << b.mean_sfde_ct << "\n";
  for (const auto& p : r.hit_rate) out << "hit_rate@" << p.eps << "," << p.rate << "\n";
  return out.str();
}

}  // namespace ilvm::metrics
