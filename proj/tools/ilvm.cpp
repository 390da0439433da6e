// ilvm: data generation, training, sampling, evaluation, planning and
// latent interpolation from the command line.
//
// Exit codes: 0 ok, 1 usage or invalid input, 2 runtime failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ilvm/checkpoint.hpp"
#include "ilvm/dataset.hpp"
#include "ilvm/experiment.hpp"
#include "ilvm/metrics.hpp"
#include "ilvm/model.hpp"
#include "ilvm/planner.hpp"
#include "ilvm/samples.hpp"
#include "ilvm/svg.hpp"
#include "ilvm/train.hpp"

#ifndef ILVM_GIT_DESCRIBE
#define ILVM_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kSampleChunk = 32;

fs::path default_out_dir() {
  const char* env = std::getenv("ILVM_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

json provenance(const std::string& config_hash, std::uint64_t seed, const std::string& command) {
  return {{"config_hash", config_hash}, {"seed", seed}, {"git_describe", ILVM_GIT_DESCRIBE}, {"command", command}};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { ilvm::viz::write_text(path, j.dump(2) + "\n"); }

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Config hash a checkpoint was trained under, falling back to its model config hash.
std::string checkpoint_config_hash(const fs::path& prefix) {
  const auto info = ilvm::read_checkpoint_info(prefix);
  if (info.provenance.is_object() && info.provenance.contains("config_hash")) {
    return info.provenance.at("config_hash").get<std::string>();
  }
  return info.config_hash;
}

const ilvm::Scene& find_scene(const std::vector<ilvm::Scene>& scenes, std::optional<std::uint64_t> id) {
  if (scenes.empty()) throw std::invalid_argument("scene file is empty");
  if (!id) return scenes.front();
  for (const auto& s : scenes)
    if (s.id == *id) return s;
  throw std::invalid_argument("scene id " + std::to_string(*id) + " not found");
}

std::vector<ilvm::SceneSampleSet> sample_all(const ilvm::model::ForecastModel& model,
                                             const std::vector<ilvm::Scene>& scenes, std::size_t samples,
                                             std::uint64_t seed) {
  std::vector<ilvm::SceneSampleSet> out;
  out.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); i += kSampleChunk) {
    const std::size_t n = std::min(kSampleChunk, scenes.size() - i);
    auto part = model.sample(std::span<const ilvm::Scene>(scenes.data() + i, n), samples, seed);
    for (auto& s : part) out.push_back(std::move(s));
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// gen-data

struct GenDataArgs {
  std::string manifest;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  const json mj = read_json(a.manifest);
  const auto manifest = ilvm::data::manifest_from_json(mj);
  const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  const auto prov = provenance(ilvm::config_hash(ilvm::data::to_json(manifest)), manifest.seed, "gen-data");
  ilvm::data::build_dataset(manifest, out, prov);
  std::cout << "wrote " << (out / "train.jsonl").string() << ", val.jsonl, test.jsonl\n";
  return 0;
}

// train

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::int64_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<double> beta;
  std::string train_data;
  std::string model_kind;
};

int cmd_train(const TrainArgs& a) {
  const fs::path config_path(a.config);
  auto cfg = ilvm::experiment_from_json(read_json(config_path));
  // Flags override the config file.
  if (a.steps) cfg.train.steps = *a.steps;
  if (a.seed) cfg.seed = *a.seed;
  if (a.lr) cfg.train.lr = *a.lr;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.beta) cfg.train.fixed_beta = *a.beta;
  if (!a.train_data.empty()) cfg.train_data = a.train_data;
  if (!a.model_kind.empty()) cfg.model_kind = a.model_kind;
  cfg = ilvm::experiment_from_json(ilvm::to_json(cfg));
  cfg.train.seed = cfg.seed;
  if (cfg.train_data.empty()) throw std::invalid_argument("config has no data.train path");

  const fs::path base = config_path.parent_path();
  const auto data = ilvm::data::read_scenes(resolve(base, cfg.train_data));
  const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  fs::create_directories(out);

  const std::string hash = ilvm::experiment_hash(cfg);
  const json prov = provenance(hash, cfg.seed, "train");
  auto model = ilvm::model::make_model(cfg.model_kind, cfg.model, cfg.seed);

  std::ostringstream csv;
  csv << "# " << prov.dump() << "\n";
  csv << "step,loss,recon,kl,beta,grad_norm\n";
  const auto records = ilvm::model::train(*model, data.scenes, cfg.train, [&](const ilvm::model::TrainRecord& r) {
    csv << r.step << ',' << csv_number(r.loss) << ',' << csv_number(r.recon) << ',' << csv_number(r.kl) << ','
        << csv_number(r.beta) << ',' << csv_number(r.grad_norm) << '\n';
  });
  ilvm::viz::write_text(out / "loss.csv", csv.str());

  json ckpt_prov = prov;
  ckpt_prov["experiment"] = ilvm::to_json(cfg);
  const std::string blob = ilvm::model::save_model(out / "model", *model, ckpt_prov);
  json resolved = ilvm::to_json(cfg);
  resolved["provenance"] = prov;
  write_json(out / "config.json", resolved);

  std::cout << "config " << hash << " trained " << records.size() << " steps";
  if (!records.empty()) std::cout << ", final loss " << records.back().loss;
  std::cout << "\ncheckpoint " << (out / "model").string() << " blob " << blob << "\n";
  return 0;
}

// sample

struct SampleArgs {
  std::string checkpoint;
  std::string scenes;
  std::optional<std::uint64_t> scene_id;
  std::size_t samples = 15;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  if (a.samples == 0) throw std::invalid_argument("--samples must be positive");
  auto model = ilvm::model::load_model(a.checkpoint);
  const auto file = ilvm::data::read_scenes(a.scenes);
  std::vector<ilvm::Scene> scenes = file.scenes;
  if (a.scene_id) scenes = {find_scene(file.scenes, a.scene_id)};
  if (scenes.empty()) throw std::invalid_argument("scene file is empty");

  const json prov = provenance(checkpoint_config_hash(a.checkpoint), a.seed, "sample");
  const auto sets = sample_all(*model, scenes, a.samples, a.seed);
  json j = {{"provenance", prov}, {"model_kind", model->kind()}, {"sets", json::array()}};
  for (const auto& s : sets) j["sets"].push_back(ilvm::samples_to_json(s));

  const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  fs::create_directories(out);
  write_json(out / "samples.json", j);
  ilvm::viz::write_text(out / "samples.svg", ilvm::viz::render_samples(scenes.front(), sets.front(), prov));
  std::cout << "sampled " << sets.size() << " scenes x " << a.samples << " into " << (out / "samples.json").string()
            << "\n";
  return 0;
}

// eval

struct EvalArgs {
  std::string checkpoint;
  std::string samples_file;
  std::string scenes;
  std::size_t samples = 15;
  std::uint64_t seed = 0;
  double eps_iou = 0.1;
  bool squared = false;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.samples_file.empty()) {
    throw std::invalid_argument("give exactly one of --checkpoint and --from-samples");
  }
  const auto file = ilvm::data::read_scenes(a.scenes);
  std::vector<ilvm::SceneSampleSet> sets;
  std::vector<ilvm::Scene> scenes;
  json prov;
  if (!a.checkpoint.empty()) {
    if (a.samples == 0) throw std::invalid_argument("--samples must be positive");
    auto model = ilvm::model::load_model(a.checkpoint);
    scenes = file.scenes;
    sets = sample_all(*model, scenes, a.samples, a.seed);
    prov = provenance(checkpoint_config_hash(a.checkpoint), a.seed, "eval");
  } else {
    const json j = read_json(a.samples_file);
    if (!j.contains("sets")) throw std::invalid_argument(a.samples_file + ": no sample sets");
    const json& src = j.contains("provenance") ? j.at("provenance") : json::object();
    prov = provenance(src.value("config_hash", ""), src.value("seed", std::uint64_t{0}), "eval");
    for (const auto& sj : j.at("sets")) {
      sets.push_back(ilvm::samples_from_json(sj));
      scenes.push_back(find_scene(file.scenes, sets.back().scene_id));
    }
  }
  ilvm::metrics::MetricOptions opts;
  opts.squared = a.squared;
  opts.collision.eps_iou = a.eps_iou;
  const auto report = ilvm::metrics::evaluate(sets, scenes, opts);

  const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  fs::create_directories(out);
  json rj = ilvm::metrics::to_json(report);
  rj["provenance"] = prov;
  write_json(out / "metrics.json", rj);
  ilvm::viz::write_text(out / "metrics.csv", "# " + prov.dump() + "\n" + ilvm::metrics::to_csv(report));
  ilvm::viz::write_text(out / "hit_rate.svg", ilvm::viz::render_hit_rate(report.hit_rate, prov));
  const auto& d = report.displacement;
  std::cout << "scenes " << report.scenes << " samples " << report.samples << "\n"
            << "minSADE " << d.min_sade << " meanSADE " << d.mean_sade << " minSFDE " << d.min_sfde << " meanSFDE "
            << d.mean_sfde << " SCR " << report.scr << "\n";
  return 0;
}

// plan

struct PlanArgs {
  std::string checkpoint;
  std::string scenes;
  std::optional<std::uint64_t> scene_id;
  std::size_t ego = 0;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  std::string weights_file;
  std::optional<double> w_collision, w_lat, w_jerk, w_progress;
  std::string out;
};

int cmd_plan(const PlanArgs& a) {
  if (a.samples == 0) throw std::invalid_argument("--samples must be positive");
  json wj = a.weights_file.empty() ? json::object() : read_json(a.weights_file);
  if (a.w_collision) wj["collision"] = *a.w_collision;
  if (a.w_lat) wj["lat_accel"] = *a.w_lat;
  if (a.w_jerk) wj["jerk"] = *a.w_jerk;
  if (a.w_progress) wj["progress"] = *a.w_progress;
  const auto weights = ilvm::plan::cost_weights_from_json(wj);

  auto model = ilvm::model::load_model(a.checkpoint);
  const auto file = ilvm::data::read_scenes(a.scenes);
  const auto& scene = find_scene(file.scenes, a.scene_id);
  if (a.ego >= scene.size()) throw std::invalid_argument("--ego is out of range for this scene");

  const auto& ego = scene.actors[a.ego];
  const double speed = ego.past.empty() ? 0.0 : ilvm::geo::norm(ego.past.back()) / scene.dt;
  ilvm::plan::LatticeOptions lattice;
  lattice.horizon = scene.horizon();
  lattice.dt = scene.dt;
  const auto candidates = ilvm::plan::make_candidates(ego.pose, speed, ego.length, ego.width, lattice);
  const auto samples = model->sample(scene, a.samples, a.seed);
  const auto result = ilvm::plan::plan(candidates, samples, weights, a.ego);

  const json prov = provenance(checkpoint_config_hash(a.checkpoint), a.seed, "plan");
  std::ostringstream csv;
  csv << "# " << prov.dump() << "\n";
  csv << "index,target_speed,lateral_offset,accel_limit,collision_rate,lat_accel,jerk,progress,total,chosen\n";
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    const auto& c = candidates.candidates[i];
    const auto& t = result.costs[i];
    csv << i << ',' << csv_number(c.target_speed) << ',' << csv_number(c.lateral_offset) << ','
        << csv_number(c.accel_limit) << ',' << csv_number(t.collision_rate) << ',' << csv_number(t.lat_accel) << ','
        << csv_number(t.jerk) << ',' << csv_number(t.progress) << ',' << csv_number(t.total) << ','
        << (i == result.chosen ? 1 : 0) << '\n';
  }
  const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  fs::create_directories(out);
  ilvm::viz::write_text(out / "plan.csv", csv.str());
  ilvm::viz::write_text(out / "plan.svg", ilvm::viz::render_plan(scene, samples, candidates, result, prov));
  const auto& c = candidates.candidates[result.chosen];
  std::cout << "scene " << scene.id << " chose candidate " << result.chosen << " (speed " << c.target_speed
            << ", offset " << c.lateral_offset << ", accel " << c.accel_limit << ") collision rate "
            << result.costs[result.chosen].collision_rate << "\n";
  return 0;
}

// interpolate

struct InterpolateArgs {
  std::string checkpoint;
  std::string scenes;
  std::optional<std::uint64_t> scene_id;
  std::size_t steps = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_interpolate(const InterpolateArgs& a) {
  if (a.steps < 2) throw std::invalid_argument("--steps must be at least 2");
  auto model = ilvm::model::load_model(a.checkpoint);
  const auto* ilvm_model = dynamic_cast<const ilvm::model::IlvmModel*>(model.get());
  if (!ilvm_model) throw std::invalid_argument("interpolation needs a latent-variable checkpoint");
  const auto file = ilvm::data::read_scenes(a.scenes);
  const auto& scene = find_scene(file.scenes, a.scene_id);

  const auto z_a = ilvm_model->sample_latent(scene, a.seed, 0);
  const auto z_b = ilvm_model->sample_latent(scene, a.seed, 1);
  const auto strip = ilvm_model->interpolate(scene, z_a, z_b, a.steps);

  const json prov = provenance(checkpoint_config_hash(a.checkpoint), a.seed, "interpolate");
  const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  fs::create_directories(out);
  write_json(out / "interpolation.json", {{"provenance", prov}, {"set", ilvm::samples_to_json(strip)}});
  ilvm::viz::write_text(out / "interpolation.svg", ilvm::viz::render_strip(scene, strip, prov));
  std::cout << "scene " << scene.id << " interpolated in " << a.steps << " steps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-consistent multi-agent motion forecasting"};
  app.require_subcommand(1);
  const std::string out_help = "Output directory (default: $ILVM_OUT_DIR or .)";

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate train/val/test scene files from a manifest");
  gen_cmd->add_option("--manifest", gen.manifest, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen.out, out_help);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model from an experiment config");
  train_cmd->add_option("--config", tr.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, out_help);
  train_cmd->add_option("--steps", tr.steps, "Override train.steps");
  train_cmd->add_option("--seed", tr.seed, "Override seed");
  train_cmd->add_option("--lr", tr.lr, "Override train.lr");
  train_cmd->add_option("--batch-size", tr.batch_size, "Override train.batch_size");
  train_cmd->add_option("--beta", tr.beta, "Fixed KL weight instead of the cyclic schedule");
  train_cmd->add_option("--train-data", tr.train_data, "Override data.train");
  train_cmd->add_option("--model-kind", tr.model_kind, "Override model_kind");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Draw joint samples for scenes");
  sample_cmd->add_option("--checkpoint", sa.checkpoint, "Checkpoint prefix")->required();
  sample_cmd->add_option("--scenes", sa.scenes, "Scene file (.jsonl)")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--scene-id", sa.scene_id, "Only this scene");
  sample_cmd->add_option("--samples", sa.samples, "Samples per scene")->capture_default_str();
  sample_cmd->add_option("--seed", sa.seed, "Sampling seed")->capture_default_str();
  sample_cmd->add_option("--out", sa.out, out_help);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compute forecasting metrics");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint prefix to sample from");
  eval_cmd->add_option("--from-samples", ev.samples_file, "samples.json written by `sample`")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--scenes", ev.scenes, "Ground-truth scene file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--samples", ev.samples, "Samples per scene with --checkpoint")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  eval_cmd->add_option("--eps-iou", ev.eps_iou, "IoU threshold for scene collisions")->capture_default_str();
  eval_cmd->add_flag("--squared", ev.squared, "Squared instead of Euclidean displacement");
  eval_cmd->add_option("--out", ev.out, out_help);

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "Choose an ego trajectory against forecast samples");
  plan_cmd->add_option("--checkpoint", pl.checkpoint, "Checkpoint prefix")->required();
  plan_cmd->add_option("--scenes", pl.scenes, "Scene file (.jsonl)")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--scene-id", pl.scene_id, "Scene id (default: first)");
  plan_cmd->add_option("--ego", pl.ego, "Index of the actor replaced by the ego vehicle")->capture_default_str();
  plan_cmd->add_option("--samples", pl.samples, "Forecast samples")->capture_default_str();
  plan_cmd->add_option("--seed", pl.seed, "Sampling seed")->capture_default_str();
  plan_cmd->add_option("--weights", pl.weights_file, "Cost weights JSON")->check(CLI::ExistingFile);
  plan_cmd->add_option("--w-collision", pl.w_collision, "Collision weight");
  plan_cmd->add_option("--w-lat", pl.w_lat, "Lateral acceleration weight");
  plan_cmd->add_option("--w-jerk", pl.w_jerk, "Jerk weight");
  plan_cmd->add_option("--w-progress", pl.w_progress, "Progress weight");
  plan_cmd->add_option("--out", pl.out, out_help);

  InterpolateArgs ip;
  auto* interp_cmd = app.add_subcommand("interpolate", "Decode along a line between two scene latents");
  interp_cmd->add_option("--checkpoint", ip.checkpoint, "Checkpoint prefix")->required();
  interp_cmd->add_option("--scenes", ip.scenes, "Scene file (.jsonl)")->required()->check(CLI::ExistingFile);
  interp_cmd->add_option("--scene-id", ip.scene_id, "Scene id (default: first)");
  interp_cmd->add_option("--steps", ip.steps, "Interpolation steps")->capture_default_str();
  interp_cmd->add_option("--seed", ip.seed, "Latent seed")->capture_default_str();
  interp_cmd->add_option("--out", ip.out, out_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*sample_cmd) return cmd_sample(sa);
    if (*eval_cmd) return cmd_eval(ev);
    if (*plan_cmd) return cmd_plan(pl);
    if (*interp_cmd) return cmd_interpolate(ip);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
