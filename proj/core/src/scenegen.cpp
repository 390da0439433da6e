#include "ilvm/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ilvm::scenegen {
namespace {

using geo::Pose2;
using geo::Vec2;
constexpr double kPi = std::numbers::pi;

// Centre line parameterised by arc length. Negative arc length extends the
// initial straight segment backwards. An optional quarter turn starts at
// `turn_at`, after which the path continues straight.
struct Path {
  Pose2 origin;
  double turn_at = std::numeric_limits<double>::infinity();
  double radius = 10.0;
  int turn = 0;  // +1 left, -1 right

  Pose2 at(double s) const {
    if (turn == 0 || s <= turn_at) return origin.compose({s, 0.0, 0.0});
    const Pose2 start = origin.compose({turn_at, 0.0, 0.0});
    const double arc = s - turn_at;
    const double quarter = 0.5 * kPi * radius;
    const double ang = std::min(arc, quarter) / radius;
    const double sign = static_cast<double>(turn);
    Pose2 local{radius * std::sin(ang), sign * radius * (1.0 - std::cos(ang)), sign * ang};
    if (arc > quarter) local = local.compose({arc - quarter, 0.0, 0.0});
    return start.compose(local);
  }
};

// Constant speed v0 up to `delay`, then constant acceleration until the speed
// reaches zero or `vmax`.
struct Profile {
  double v0 = 0.0;
  double accel = 0.0;
  double delay = 0.0;
  double vmax = 15.0;

  double distance(double t) const {
    if (t <= delay) return v0 * t;
    const double s0 = v0 * delay;
    const double tau = t - delay;
    if (accel == 0.0) return s0 + v0 * tau;
    const double limit = accel < 0.0 ? v0 / -accel : std::max(0.0, (vmax - v0) / accel);
    const double te = std::min(tau, limit);
    const double v_end = v0 + accel * te;
    return s0 + v0 * te + 0.5 * accel * te * te + v_end * (tau - te);
  }
};

Actor make_actor(const Path& path, const Profile& profile, const GeneratorParams& p, std::uint64_t track_id) {
  const auto h = static_cast<long>(p.history);
  const auto T = static_cast<long>(p.horizon);
  Actor a;
  a.track_id = track_id;
  a.length = p.box_length;
  a.width = p.box_width;
  a.pose = path.at(profile.distance(0.0));
  for (long k = -h; k <= T; ++k) {
    if (k == 0) continue;
    const Vec2 local = a.pose.to_local(path.at(profile.distance(static_cast<double>(k) * p.dt)).position());
    (k < 0 ? a.past : a.future).push_back(local);
  }
  return a;
}

std::uint64_t draw_track_id(Rng& rng) { return rng() & 0xffffffffULL; }

// Max IoU between actors `i` and `j` over future steps.
double max_future_iou(const Actor& a, const Actor& b) {
  double best = 0.0;
  const auto ha = geo::heading_by_finite_difference(a.future, 0.0, 1e-3);
  const auto hb = geo::heading_by_finite_difference(b.future, 0.0, 1e-3);
  for (std::size_t t = 0; t < a.future.size(); ++t) {
    const Pose2 pa = a.pose.compose({a.future[t].x, a.future[t].y, ha[t]});
    const Pose2 pb = b.pose.compose({b.future[t].x, b.future[t].y, hb[t]});
    best = std::max(best, geo::obb_iou(a.box_at(pa), b.box_at(pb)));
  }
  return best;
}

Scene finish(ScenarioKind kind, std::uint64_t id, int mode, const GeneratorParams& p, std::vector<Actor> actors) {
  Scene s;
  s.id = id;
  s.kind = kind;
  s.mode_label = mode;
  s.dt = p.dt;
  s.actors = std::move(actors);
  return s;
}

bool kinematically_valid(const Scene& s, const GeneratorParams& p) {
  const auto r = check_kinematics(s);
  return r.max_accel <= p.max_accel + 1e-9 && r.max_step <= p.max_speed * p.dt + 1e-9 && r.min_speed >= -1e-9 &&
         r.max_iou == 0.0;
}

Scene car_follow(const GeneratorParams& p, Rng& rng, std::uint64_t id) {
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    const Pose2 lane{uniform(rng, -50.0, 50.0), uniform(rng, -50.0, 50.0), uniform(rng, -kPi, kPi)};
    const double v = uniform(rng, 5.0, 12.0);
    const double gap = uniform(rng, 10.0, 20.0);
    const int mode = uniform(rng, 0.0, 1.0) < p.mode_probability ? 1 : 0;
    Profile prof{v, 0.0, 0.0, p.max_speed};
    if (mode == 1) {
      prof.delay = uniform(rng, 0.0, 1.5);
      prof.accel = -uniform(rng, 1.5, 3.5);
    }
    const auto leader_id = draw_track_id(rng);
    const auto follower_id = draw_track_id(rng);
    Path leader{lane.compose({gap, 0.0, 0.0})};
    Path follower{lane};
    Scene s = finish(ScenarioKind::car_follow, id, mode, p,
                     {make_actor(leader, prof, p, leader_id), make_actor(follower, prof, p, follower_id)});
    if (kinematically_valid(s, p)) return s;
  }
  throw InfeasibleParams("car_follow: no feasible draw");
}

struct YieldDraw {
  Path paths[2];
  Profile go[2];
  Profile yield[2];
  std::uint64_t ids[2];
};

std::vector<Actor> yield_actors(const YieldDraw& d, int goer, const GeneratorParams& p) {
  std::vector<Actor> actors;
  for (int i = 0; i < 2; ++i) {
    actors.push_back(make_actor(d.paths[i], i == goer ? d.go[i] : d.yield[i], p, d.ids[i]));
  }
  return actors;
}

}  // namespace

YieldGoOutcomes yield_go_outcomes(const GeneratorParams& p, Rng& rng, std::uint64_t id) {
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    const double rot = uniform(rng, -kPi, kPi);
    const double side = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0;
    const double arrival = uniform(rng, 2.0, 3.0);
    const double skew = uniform(rng, -0.15, 0.15);
    YieldDraw d;
    bool feasible = true;
    for (int i = 0; i < 2; ++i) {
      const double heading = rot + (i == 0 ? 0.0 : side * 0.5 * kPi);
      const double v = uniform(rng, 6.0, 10.0);
      const double dist = v * (arrival + (i == 0 ? 0.0 : skew));
      const Pose2 dir{0.0, 0.0, heading};
      d.paths[i] = Path{dir.compose({-dist, 0.0, 0.0})};
      d.go[i] = Profile{v, uniform(rng, -0.3, 0.5), 0.0, p.max_speed};
      const double margin = uniform(rng, 1.0, 3.0);
      const double stop_at = dist - (0.5 * p.box_length + 0.5 * p.box_width + margin);
      const double decel = stop_at > 0.0 ? v * v / (2.0 * stop_at) : std::numeric_limits<double>::infinity();
      if (decel > p.max_accel) feasible = false;
      d.yield[i] = Profile{v, -decel, 0.0, p.max_speed};
      d.ids[i] = draw_track_id(rng);
    }
    if (!feasible) continue;
    YieldGoOutcomes out{finish(ScenarioKind::yield_go, id, 0, p, yield_actors(d, 0, p)),
                        finish(ScenarioKind::yield_go, id, 1, p, yield_actors(d, 1, p))};
    if (!kinematically_valid(out.actor0_goes, p) || !kinematically_valid(out.actor1_goes, p)) continue;
    const Actor both_go_0 = out.actor0_goes.actors[0];
    const Actor both_go_1 = out.actor1_goes.actors[1];
    if (max_future_iou(both_go_0, both_go_1) <= p.collision_iou) continue;
    return out;
  }
  throw InfeasibleParams("yield_go: no feasible draw");
}

namespace {

Scene yield_go(const GeneratorParams& p, Rng& rng, std::uint64_t id) {
  auto outcomes = yield_go_outcomes(p, rng, id);
  const bool mode1 = uniform(rng, 0.0, 1.0) < p.mode_probability;
  return mode1 ? std::move(outcomes.actor1_goes) : std::move(outcomes.actor0_goes);
}

Scene turn_branch(const GeneratorParams& p, Rng& rng, std::uint64_t id) {
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    const Pose2 frame{uniform(rng, -50.0, 50.0), uniform(rng, -50.0, 50.0), uniform(rng, -kPi, kPi)};
    const double v = uniform(rng, 4.0, 5.5);
    const double to_turn = uniform(rng, 2.0, 10.0);
    const double gap = uniform(rng, 12.0, 18.0);
    const int mode = std::min(2, static_cast<int>(uniform(rng, 0.0, 3.0)));
    Path leader{frame};
    leader.turn = mode == 0 ? 0 : (mode == 1 ? 1 : -1);
    leader.turn_at = to_turn;
    leader.radius = uniform(rng, 9.0, 12.0);
    Path follower{frame.compose({-gap, 0.0, 0.0})};
    const Profile prof{v, 0.0, 0.0, p.max_speed};
    const auto leader_id = draw_track_id(rng);
    const auto follower_id = draw_track_id(rng);
    Scene s = finish(ScenarioKind::turn_branch, id, mode, p,
                     {make_actor(leader, prof, p, leader_id), make_actor(follower, prof, p, follower_id)});
    if (kinematically_valid(s, p)) return s;
  }
  throw InfeasibleParams("turn_branch: no feasible draw");
}

}  // namespace

Scene generate(ScenarioKind kind, const GeneratorParams& params, Rng& rng, std::uint64_t id) {
  if (params.dt <= 0.0 || params.horizon < 2 || params.history < 2 || params.box_length <= 0.0 ||
      params.box_width <= 0.0 || params.mode_probability < 0.0 || params.mode_probability > 1.0) {
    throw InfeasibleParams("invalid generator parameters");
  }
  switch (kind) {
    case ScenarioKind::car_follow: return car_follow(params, rng, id);
    case ScenarioKind::yield_go: return yield_go(params, rng, id);
    case ScenarioKind::turn_branch: return turn_branch(params, rng, id);
  }
  throw InfeasibleParams("unknown scenario kind");
}

int classify_yield_go(const Pose2& a, const Pose2& b, std::span<const Vec2> a_future, std::span<const Vec2> b_future) {
  // Crossing point of the two heading lines.
  const Vec2 da{std::cos(a.heading), std::sin(a.heading)};
  const Vec2 db{std::cos(b.heading), std::sin(b.heading)};
  const double denom = geo::cross(da, db);
  Vec2 conflict = 0.5 * (a.position() + b.position());
  if (std::abs(denom) > 1e-9) {
    const double ta = geo::cross(b.position() - a.position(), db) / denom;
    conflict = a.position() + ta * da;
  }
  auto progress = [&](const Pose2& pose, Vec2 dir, Vec2 local) {
    return geo::dot(pose.to_world(local) - conflict, dir);
  };
  const std::size_t T = std::min(a_future.size(), b_future.size());
  for (std::size_t t = 0; t < T; ++t) {
    const double sa = progress(a, da, a_future[t]);
    const double sb = progress(b, db, b_future[t]);
    const bool ca = sa >= 0.0, cb = sb >= 0.0;
    if (ca && cb) return sa >= sb ? 0 : 1;
    if (ca) return 0;
    if (cb) return 1;
  }
  if (T == 0) return 0;
  return progress(a, da, a_future[T - 1]) >= progress(b, db, b_future[T - 1]) ? 0 : 1;
}

std::vector<Vec2> world_track(const Actor& actor) {
  std::vector<Vec2> track;
  for (const auto& p : actor.past) track.push_back(actor.pose.to_world(p));
  track.push_back(actor.pose.position());
  for (const auto& p : actor.future) track.push_back(actor.pose.to_world(p));
  return track;
}

KinematicsReport check_kinematics(const Scene& scene) {
  KinematicsReport r;
  r.min_speed = std::numeric_limits<double>::infinity();
  const double dt = scene.dt;
  std::vector<std::vector<Pose2>> poses;
  for (const auto& a : scene.actors) {
    const auto track = world_track(a);
    for (std::size_t k = 0; k + 1 < track.size(); ++k) {
      const double step = geo::norm(track[k + 1] - track[k]);
      r.max_step = std::max(r.max_step, step);
      r.min_speed = std::min(r.min_speed, step / dt);
    }
    for (std::size_t k = 1; k + 1 < track.size(); ++k) {
      const Vec2 acc = (1.0 / (dt * dt)) * (track[k + 1] - 2.0 * track[k] + track[k - 1]);
      r.max_accel = std::max(r.max_accel, geo::norm(acc));
    }
    const auto headings = geo::heading_by_finite_difference(track, a.pose.heading, 1e-3);
    std::vector<Pose2> ps;
    for (std::size_t k = 0; k < track.size(); ++k) ps.emplace_back(track[k].x, track[k].y, headings[k]);
    poses.push_back(std::move(ps));
  }
  for (std::size_t i = 0; i < scene.actors.size(); ++i)
    for (std::size_t j = i + 1; j < scene.actors.size(); ++j)
      for (std::size_t k = 0; k < poses[i].size(); ++k)
        r.max_iou = std::max(r.max_iou, geo::obb_iou(scene.actors[i].box_at(poses[i][k]),
                                                     scene.actors[j].box_at(poses[j][k])));
  return r;
}

}  // namespace ilvm::scenegen
