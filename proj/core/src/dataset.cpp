#include "ilvm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace ilvm::data {
namespace {

using nlohmann::json;

json points_to_json(const std::vector<geo::Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<geo::Vec2> points_from_json(const json& arr) {
  std::vector<geo::Vec2> pts;
  pts.reserve(arr.size());
  for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace

json to_json(const DatasetManifest& m) {
  json counts = json::object();
  for (const auto& [kind, n] : m.counts) counts[to_string(kind)] = n;
  const auto& g = m.generator;
  return {{"seed", m.seed},
          {"counts", counts},
          {"splits", {{"train", m.train_fraction}, {"val", m.val_fraction}, {"test", m.test_fraction}}},
          {"dt", g.dt},
          {"history", g.history},
          {"horizon", g.horizon},
          {"box", {{"length", g.box_length}, {"width", g.box_width}}},
          {"mode_probability", g.mode_probability}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.seed = j.value("seed", std::uint64_t{0});
  const json counts = j.value("counts", json::object());
  for (const auto& [name, n] : counts.items()) {
    const auto kind = parse_scenario_kind(name);
    if (!kind) throw std::invalid_argument("unknown scenario kind '" + name + "'");
    m.counts[*kind] = n.get<std::size_t>();
  }
  if (j.contains("splits")) {
    const auto& s = j.at("splits");
    m.train_fraction = s.value("train", m.train_fraction);
    m.val_fraction = s.value("val", m.val_fraction);
    m.test_fraction = s.value("test", m.test_fraction);
  }
  const double total = m.train_fraction + m.val_fraction + m.test_fraction;
  if (m.train_fraction < 0 || m.val_fraction < 0 || m.test_fraction < 0 || std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  auto& g = m.generator;
  g.dt = j.value("dt", g.dt);
  g.history = j.value("history", g.history);
  g.horizon = j.value("horizon", g.horizon);
  if (j.contains("box")) {
    g.box_length = j["box"].value("length", g.box_length);
    g.box_width = j["box"].value("width", g.box_width);
  }
  g.mode_probability = j.value("mode_probability", g.mode_probability);
  return m;
}

DatasetSplits generate_splits(const DatasetManifest& manifest) {
  std::vector<Scene> all;
  std::uint64_t id = 0;
  for (const auto& [kind, n] : manifest.counts) {
    for (std::size_t i = 0; i < n; ++i, ++id) {
      Rng rng(derive_seed(manifest.seed, {id}));
      all.push_back(scenegen::generate(kind, manifest.generator, rng, id));
    }
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(manifest.seed, {0x5311'7000ULL}));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const auto n = static_cast<double>(all.size());
  const auto n_train = static_cast<std::size_t>(std::llround(manifest.train_fraction * n));
  const auto n_val = std::min(all.size() - n_train, static_cast<std::size_t>(std::llround(manifest.val_fraction * n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> val(order.begin() + n_train, order.begin() + n_train + n_val);
  std::vector<std::size_t> test(order.begin() + n_train + n_val, order.end());
  auto collect = [&](std::vector<std::size_t> ids) {
    std::sort(ids.begin(), ids.end());
    std::vector<Scene> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(all[i]);
    return out;
  };
  return {collect(train), collect(val), collect(test)};
}

void build_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir, const json& provenance) {
  const auto splits = generate_splits(manifest);
  std::filesystem::create_directories(dir);
  const json m = to_json(manifest);
  write_scenes(dir / "train.jsonl", splits.train, {{"split", "train"}, {"manifest", m}, {"provenance", provenance}});
  write_scenes(dir / "val.jsonl", splits.val, {{"split", "val"}, {"manifest", m}, {"provenance", provenance}});
  write_scenes(dir / "test.jsonl", splits.test, {{"split", "test"}, {"manifest", m}, {"provenance", provenance}});
}

json scene_to_json(const Scene& scene) {
  json actors = json::array();
  for (const auto& a : scene.actors) {
    actors.push_back({{"track_id", a.track_id},
                      {"pose", {{"x", a.pose.x}, {"y", a.pose.y}, {"heading", a.pose.heading}}},
                      {"box", {{"length", a.length}, {"width", a.width}}},
                      {"past", points_to_json(a.past)},
                      {"future", points_to_json(a.future)}});
  }
  return {{"record", "scene"},       {"id", scene.id}, {"kind", to_string(scene.kind)},
          {"mode_label", scene.mode_label}, {"dt", scene.dt}, {"actors", actors}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.id = j.at("id").get<std::uint64_t>();
  const auto kind = parse_scenario_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown scene kind");
  s.kind = *kind;
  s.mode_label = j.value("mode_label", 0);
  s.dt = j.value("dt", 0.5);
  for (const auto& ja : j.at("actors")) {
    Actor a;
    a.track_id = ja.at("track_id").get<std::uint64_t>();
    const auto& p = ja.at("pose");
    a.pose = geo::Pose2(p.at("x").get<double>(), p.at("y").get<double>(), p.at("heading").get<double>());
    a.length = ja.at("box").at("length").get<double>();
    a.width = ja.at("box").at("width").get<double>();
    a.past = points_from_json(ja.at("past"));
    a.future = points_from_json(ja.value("future", json::array()));
    s.actors.push_back(std::move(a));
  }
  return s;
}

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes, const json& header_extra) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  json header = {{"record", "header"}, {"format", kSceneFormat}, {"count", scenes.size()}};
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  out << header.dump() << '\n';
  for (const auto& s : scenes) out << scene_to_json(s).dump() << '\n';
}

SceneFile read_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  SceneFile file;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      if (first) {
        if (j.value("record", "") != "header" || j.value("format", "") != kSceneFormat) {
          throw std::invalid_argument("missing " + std::string(kSceneFormat) + " header");
        }
        file.header = std::move(j);
        first = false;
        continue;
      }
      file.scenes.push_back(scene_from_json(j));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (first) throw std::invalid_argument(path.string() + ": empty file");
  return file;
}

}  // namespace ilvm::data
