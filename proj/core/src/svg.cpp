#include "ilvm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ilvm::viz {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string time_color(double u) {
  u = std::clamp(u, 0.0, 1.0);
  // Hue sweeps 0 (red) through 300 (magenta) and on to a pink at 330 degrees,
  // with the last stretch desaturated slightly.
  const double hue = 330.0 * u;
  const double sat = u > 0.9 ? 1.0 - 3.0 * (u - 0.9) : 1.0;
  const double c = sat;
  const double hp = hue / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = 1.0 - sat;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround((r + m) * 255)),
                static_cast<int>(std::lround((g + m) * 255)), static_cast<int>(std::lround((b + m) * 255)));
  return buf;
}

void Bounds::include(geo::Vec2 p) {
  min_x = std::min(min_x, p.x);
  min_y = std::min(min_y, p.y);
  max_x = std::max(max_x, p.x);
  max_y = std::max(max_y, p.y);
}

void Bounds::pad(double margin) {
  min_x -= margin;
  min_y -= margin;
  max_x += margin;
  max_y += margin;
}

Canvas::Canvas(double width_px, double height_px) : width_(width_px), height_(height_px) {
  begin_panel({}, 0, 0, width_px, height_px);
}

void Canvas::begin_panel(const Bounds& world, double x0, double y0, double w, double h) {
  world_ = world;
  px0_ = x0;
  py0_ = y0;
  pw_ = w;
  ph_ = h;
  const double wx = std::max(world.max_x - world.min_x, 1e-6);
  const double wy = std::max(world.max_y - world.min_y, 1e-6);
  scale_ = std::min(w / wx, h / wy);
}

geo::Vec2 Canvas::map(geo::Vec2 p) const {
  const double cx = 0.5 * (world_.min_x + world_.max_x), cy = 0.5 * (world_.min_y + world_.max_y);
  return {px0_ + 0.5 * pw_ + (p.x - cx) * scale_, py0_ + 0.5 * ph_ - (p.y - cy) * scale_};
}

void Canvas::polyline(const std::vector<geo::Vec2>& pts, const std::string& color, double width, double opacity,
                      bool dashed) {
  body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(width) << "\" stroke-opacity=\""
        << fmt(opacity) << "\"" << (dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
  for (const auto& p : pts) {
    const auto q = map(p);
    body_ << fmt(q.x) << ',' << fmt(q.y) << ' ';
  }
  body_ << "\"/>\n";
}

void Canvas::time_track(const std::vector<geo::Vec2>& pts, double width, double opacity) {
  if (pts.size() < 2) return;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(pts.size() - 2, 1));
    const auto a = map(pts[k]), b = map(pts[k + 1]);
    body_ << "<line x1=\"" << fmt(a.x) << "\" y1=\"" << fmt(a.y) << "\" x2=\"" << fmt(b.x) << "\" y2=\"" << fmt(b.y)
          << "\" stroke=\"" << time_color(u) << "\" stroke-width=\"" << fmt(width) << "\" stroke-opacity=\""
          << fmt(opacity) << "\" stroke-linecap=\"round\"/>\n";
  }
}

void Canvas::box(const geo::OrientedBox& b, const std::string& stroke, const std::string& fill, double opacity) {
  body_ << "<polygon stroke=\"" << stroke << "\" fill=\"" << fill << "\" fill-opacity=\"" << fmt(opacity)
        << "\" points=\"";
  for (const auto& c : b.corners()) {
    const auto q = map(c);
    body_ << fmt(q.x) << ',' << fmt(q.y) << ' ';
  }
  body_ << "\"/>\n";
}

void Canvas::text(double x, double y, const std::string& s, double size) {
  body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\" font-size=\"" << fmt(size)
        << "\">" << escape(s) << "</text>\n";
}

void Canvas::raw(const std::string& element) { body_ << element << '\n'; }

std::string Canvas::str(const nlohmann::json& provenance) const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_) << "\" height=\"" << fmt(height_)
      << "\" viewBox=\"0 0 " << fmt(width_) << ' ' << fmt(height_) << "\">\n";
  out << "<metadata>" << escape(provenance.dump()) << "</metadata>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << body_.str() << "</svg>\n";
  return out.str();
}

Bounds scene_bounds(const Scene& scene, const SceneSampleSet* samples) {
  Bounds b{1e300, 1e300, -1e300, -1e300};
  for (const auto& a : scene.actors) {
    b.include(a.pose.position());
    for (const auto& p : a.past) b.include(a.pose.to_world(p));
    for (const auto& p : a.future) b.include(a.pose.to_world(p));
  }
  if (samples) {
    for (std::size_t s = 0; s < samples->samples; ++s)
      for (std::size_t n = 0; n < samples->actors; ++n)
        for (const auto& p : samples->world_track(s, n)) b.include(p);
  }
  b.pad(5.0);
  return b;
}

namespace {

void draw_scene(Canvas& c, const Scene& scene, const SceneSampleSet& samples, double opacity) {
  for (std::size_t s = 0; s < samples.samples; ++s)
    for (std::size_t n = 0; n < samples.actors; ++n) {
      auto track = samples.world_track(s, n);
      track.insert(track.begin(), samples.poses[n].position());
      c.time_track(track, 1.5, opacity);
    }
  for (const auto& a : scene.actors) {
    std::vector<geo::Vec2> past;
    for (const auto& p : a.past) past.push_back(a.pose.to_world(p));
    past.push_back(a.pose.position());
    c.polyline(past, "#555555", 1.5);
    if (!a.future.empty()) {
      std::vector<geo::Vec2> gt{a.pose.position()};
      for (const auto& p : a.future) gt.push_back(a.pose.to_world(p));
      c.polyline(gt, "#222222", 1.0, 0.8, true);
    }
    c.box(a.box_at(a.pose), "#1f3a93", "#8fa8e8", 0.7);
  }
}

}  // namespace

std::string render_samples(const Scene& scene, const SceneSampleSet& samples, const nlohmann::json& provenance) {
  Canvas c(640, 640);
  c.begin_panel(scene_bounds(scene, &samples), 20, 30, 600, 590);
  const double opacity = std::clamp(3.0 / static_cast<double>(std::max<std::size_t>(samples.samples, 1)), 0.08, 1.0);
  draw_scene(c, scene, samples, opacity);
  c.text(20, 20, "scene " + std::to_string(scene.id) + " (" + to_string(scene.kind) + "), " +
                     std::to_string(samples.samples) + " samples");
  return c.str(provenance);
}

std::string render_hit_rate(const std::vector<metrics::HitRatePoint>& curve, const nlohmann::json& provenance) {
  Canvas c(480, 360);
  const double x0 = 60, y0 = 20, w = 400, h = 290;
  double max_eps = 1.0;
  for (const auto& p : curve) max_eps = std::max(max_eps, p.eps);
  std::ostringstream axes;
  axes << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"#444444\"/>";
  c.raw(axes.str());
  std::ostringstream line;
  line << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (const auto& p : curve) line << fmt(x0 + w * p.eps / max_eps) << ',' << fmt(y0 + h * (1.0 - p.rate)) << ' ';
  line << "\"/>";
  c.raw(line.str());
  for (int k = 0; k <= 4; ++k) {
    c.text(x0 + w * k / 4.0 - 8, y0 + h + 16, fmt(max_eps * k / 4.0), 10);
    c.text(x0 - 40, y0 + h * (1.0 - k / 4.0) + 4, fmt(k / 4.0), 10);
  }
  c.text(x0 + w / 2 - 40, y0 + h + 34, "threshold (m)", 11);
  c.text(4, 14, "hit rate", 11);
  return c.str(provenance);
}

std::string render_plan(const Scene& scene, const SceneSampleSet& samples, const plan::CandidateSet& candidates,
                        const plan::PlanResult& result, const nlohmann::json& provenance) {
  Canvas c(640, 640);
  Bounds b = scene_bounds(scene, &samples);
  for (const auto& cand : candidates.candidates)
    for (const auto& p : cand.poses) b.include(p.position());
  c.begin_panel(b, 20, 30, 600, 590);
  draw_scene(c, scene, samples, 0.15);
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    std::vector<geo::Vec2> pts{candidates.start.position()};
    for (const auto& p : candidates.candidates[i].poses) pts.push_back(p.position());
    const bool chosen = i == result.chosen;
    c.polyline(pts, chosen ? "#27ae60" : "#999999", chosen ? 3.0 : 0.8, chosen ? 1.0 : 0.6);
  }
  const auto& best = candidates.candidates[result.chosen];
  c.box({best.poses.back(), candidates.length, candidates.width}, "#27ae60", "none", 1.0);
  c.text(20, 20, "plan: candidate " + std::to_string(result.chosen) + " of " +
                     std::to_string(candidates.candidates.size()));
  return c.str(provenance);
}

std::string render_strip(const Scene& scene, const SceneSampleSet& steps, const nlohmann::json& provenance) {
  const double panel = 240;
  Canvas c(panel * static_cast<double>(steps.samples) + 20, panel + 40);
  const Bounds b = scene_bounds(scene, &steps);
  for (std::size_t k = 0; k < steps.samples; ++k) {
    SceneSampleSet one = SceneSampleSet::for_scene(scene, 1);
    for (std::size_t n = 0; n < steps.actors; ++n)
      for (std::size_t t = 0; t < steps.horizon; ++t) one.set(0, n, t, steps.local(k, n, t));
    c.begin_panel(b, 10 + panel * static_cast<double>(k), 30, panel - 10, panel - 10);
    draw_scene(c, scene, one, 1.0);
    const double l = steps.samples > 1 ? static_cast<double>(k) / static_cast<double>(steps.samples - 1) : 0.0;
    c.text(10 + panel * static_cast<double>(k), 20, "lambda = " + fmt(l), 11);
  }
  return c.str(provenance);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace ilvm::viz
