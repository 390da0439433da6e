#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace ilvm::geo {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Planar pose; the heading is kept in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double heading_) : x(x_), y(y_), heading(normalize_angle(heading_)) {}

  Vec2 position() const { return {x, y}; }
  /// Maps a point from this pose's frame into the parent frame.
  Vec2 to_world(Vec2 local) const;
  /// Maps a parent-frame point into this pose's frame.
  Vec2 to_local(Vec2 world) const;
  /// Pose `local` (expressed in this frame) in the parent frame.
  Pose2 compose(const Pose2& local) const;
  /// Pose `world` expressed in this frame.
  Pose2 relative(const Pose2& world) const;
};

/// (dx, dy) of v's origin in u's frame, sin and cos of the heading difference.
std::array<double, 4> relative_transform(const Pose2& u, const Pose2& v);

struct OrientedBox {
  Pose2 center;
  double length = 4.5;
  double width = 2.0;

  /// Counterclockwise, starting at the front-right corner.
  std::array<Vec2, 4> corners() const;
  double area() const { return length * width; }
};

double polygon_area(std::span<const Vec2> poly);
/// Sutherland-Hodgman clip of `subject` by a convex counterclockwise `clip`.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Intersection over union of two oriented boxes. Throws on non-positive extents.
double obb_iou(const OrientedBox& a, const OrientedBox& b);
double obb_intersection_area(const OrientedBox& a, const OrientedBox& b);

/// Per-waypoint heading from forward differences (backward difference on the
/// last point). Steps shorter than `stationary_step` inherit the previous
/// heading, starting from `initial_heading`. Needs at least two waypoints.
std::vector<double> heading_by_finite_difference(std::span<const Vec2> traj, double initial_heading = 0.0,
                                                 double stationary_step = 1e-9);

struct TrackError {
  double along = 0.0;
  double cross = 0.0;
};

/// Displacement pred - gt in the frame aligned with the ground-truth heading.
TrackError along_cross_error(Vec2 pred, Vec2 gt, double gt_heading);

}  // namespace ilvm::geo
