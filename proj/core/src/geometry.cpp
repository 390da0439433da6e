#include "ilvm/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace ilvm::geo {

double normalize_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Vec2 Pose2::to_world(Vec2 local) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
}

Vec2 Pose2::to_local(Vec2 world) const {
  const double c = std::cos(heading), s = std::sin(heading);
  const double dx = world.x - x, dy = world.y - y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2 Pose2::compose(const Pose2& local) const {
  const Vec2 p = to_world(local.position());
  return {p.x, p.y, heading + local.heading};
}

Pose2 Pose2::relative(const Pose2& world) const {
  const Vec2 p = to_local(world.position());
  return {p.x, p.y, world.heading - heading};
}

std::array<double, 4> relative_transform(const Pose2& u, const Pose2& v) {
  const Vec2 d = u.to_local(v.position());
  const double dtheta = v.heading - u.heading;
  return {d.x, d.y, std::sin(dtheta), std::cos(dtheta)};
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const double hl = 0.5 * length, hw = 0.5 * width;
  return {center.to_world({hl, -hw}), center.to_world({hl, hw}), center.to_world({-hl, hw}),
          center.to_world({-hl, -hw})};
}

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % clip.size()];
    const Vec2 edge = b - a;
    auto side = [&](Vec2 p) { return cross(edge, p - a); };  // >= 0: inside (left of edge)
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2 p = in[i];
      const Vec2 q = in[(i + 1) % in.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

double obb_intersection_area(const OrientedBox& a, const OrientedBox& b) {
  if (!(a.length > 0.0 && a.width > 0.0 && b.length > 0.0 && b.width > 0.0)) {
    throw std::invalid_argument("obb: box extents must be positive");
  }
  const double ra = 0.5 * std::hypot(a.length, a.width);
  const double rb = 0.5 * std::hypot(b.length, b.width);
  if (norm(a.center.position() - b.center.position()) > ra + rb) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  const auto poly = clip_convex(ca, cb);
  return std::max(0.0, polygon_area(poly));
}

double obb_iou(const OrientedBox& a, const OrientedBox& b) {
  const double inter = obb_intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<double> heading_by_finite_difference(std::span<const Vec2> traj, double initial_heading,
                                                 double stationary_step) {
  if (traj.size() < 2) throw std::invalid_argument("heading_by_finite_difference: need >= 2 waypoints");
  std::vector<double> out(traj.size());
  double prev = initial_heading;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const Vec2 d = t + 1 < traj.size() ? traj[t + 1] - traj[t] : traj[t] - traj[t - 1];
    if (norm(d) > stationary_step) prev = std::atan2(d.y, d.x);
    out[t] = prev;
  }
  return out;
}

TrackError along_cross_error(Vec2 pred, Vec2 gt, double gt_heading) {
  const double c = std::cos(gt_heading), s = std::sin(gt_heading);
  const Vec2 d = pred - gt;
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

}  // namespace ilvm::geo
