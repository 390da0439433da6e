#pragma once

// Minimal SVG emission for overhead scene plots and metric curves. Time along
// a trajectory is encoded by a rainbow ramp from red (first step) to pink (last).

#include <array>
#include <cstddef>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilvm/geometry.hpp"
#include "ilvm/metrics.hpp"
#include "ilvm/planner.hpp"
#include "ilvm/samples.hpp"
#include "ilvm/scene.hpp"

namespace ilvm::viz {

/// "#rrggbb" for u in [0, 1].
std::string time_color(double u);

struct Bounds {
  double min_x = 0.0, min_y = 0.0, max_x = 1.0, max_y = 1.0;
  void include(geo::Vec2 p);
  void pad(double margin);
};

/// World-to-pixel mapping with +y up; one canvas may hold several panels.
class Canvas {
 public:
  Canvas(double width_px, double height_px);

  void begin_panel(const Bounds& world, double x0, double y0, double w, double h);
  void polyline(const std::vector<geo::Vec2>& pts, const std::string& color, double width, double opacity = 1.0,
                bool dashed = false);
  /// Segments coloured by time step.
  void time_track(const std::vector<geo::Vec2>& pts, double width, double opacity);
  void box(const geo::OrientedBox& b, const std::string& stroke, const std::string& fill, double opacity = 1.0);
  /// Raw pixel coordinates.
  void text(double x, double y, const std::string& s, double size = 12.0);
  void raw(const std::string& element);

  std::string str(const nlohmann::json& provenance) const;

 private:
  geo::Vec2 map(geo::Vec2 p) const;
  double width_, height_;
  Bounds world_;
  double px0_ = 0.0, py0_ = 0.0, pw_ = 1.0, ph_ = 1.0, scale_ = 1.0;
  std::ostringstream body_;
};

Bounds scene_bounds(const Scene& scene, const SceneSampleSet* samples = nullptr);

/// Boxes at the current poses, ground truth dashed, S samples blended with transparency.
std::string render_samples(const Scene& scene, const SceneSampleSet& samples, const nlohmann::json& provenance);
std::string render_hit_rate(const std::vector<metrics::HitRatePoint>& curve, const nlohmann::json& provenance);
std::string render_plan(const Scene& scene, const SceneSampleSet& samples, const plan::CandidateSet& candidates,
                        const plan::PlanResult& result, const nlohmann::json& provenance);
/// One panel per interpolation step, left to right.
std::string render_strip(const Scene& scene, const SceneSampleSet& steps, const nlohmann::json& provenance);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace ilvm::viz
