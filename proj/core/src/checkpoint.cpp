#include "ilvm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ilvm {
namespace {

constexpr const char* kFormat = "ilvm-checkpoint/1";

std::filesystem::path with_ext(std::filesystem::path prefix, const char* ext) {
  if (prefix.extension() == ".json" || prefix.extension() == ".bin") prefix.replace_extension();
  prefix += ext;
  return prefix;
}

void append_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint manifest " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string config_hash(const nlohmann::json& config) { return hex64(fnv1a64(config.dump())); }

std::string parameter_blob(const nn::ParameterSet& params) {
  std::string blob;
  blob.reserve(params.scalar_count() * 8);
  for (const auto& [_, t] : params.items())
    for (double v : t.values()) append_le(blob, v);
  return blob;
}

std::string save_checkpoint(const std::filesystem::path& prefix, const nn::ParameterSet& params,
                            const std::string& model_kind, const nlohmann::json& config,
                            const nlohmann::json& provenance) {
  const std::string blob = parameter_blob(params);
  const std::string blob_hash = hex64(fnv1a64(blob));
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["model_kind"] = model_kind;
  manifest["config"] = config;
  manifest["config_hash"] = config_hash(config);
  manifest["blob"] = with_ext(prefix, ".bin").filename().string();
  manifest["blob_hash"] = blob_hash;
  manifest["provenance"] = provenance;
  auto& list = manifest["parameters"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : params.items()) {
    list.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.numel();
  }
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  {
    std::ofstream out(with_ext(prefix, ".bin"), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint blob for " + prefix.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream out(with_ext(prefix, ".json"));
  if (!out) throw std::runtime_error("cannot write checkpoint manifest for " + prefix.string());
  out << manifest.dump(2) << '\n';
  return blob_hash;
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& prefix) {
  const auto manifest = read_json(with_ext(prefix, ".json"));
  if (manifest.value("format", "") != kFormat) {
    throw std::runtime_error("unsupported checkpoint format in " + prefix.string());
  }
  CheckpointInfo info;
  info.model_kind = manifest.at("model_kind").get<std::string>();
  info.config = manifest.at("config");
  info.config_hash = manifest.at("config_hash").get<std::string>();
  info.blob_hash = manifest.at("blob_hash").get<std::string>();
  info.provenance = manifest.value("provenance", nlohmann::json::object());
  return info;
}

CheckpointInfo load_checkpoint(const std::filesystem::path& prefix, nn::ParameterSet& params) {
  const auto manifest = read_json(with_ext(prefix, ".json"));
  CheckpointInfo info = read_checkpoint_info(prefix);
  std::ifstream in(with_ext(prefix, ".bin"), std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint blob for " + prefix.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (hex64(fnv1a64(blob)) != info.blob_hash) throw std::runtime_error("checkpoint blob hash mismatch");

  const auto& list = manifest.at("parameters");
  if (list.size() != params.size()) {
    throw std::runtime_error("checkpoint has " + std::to_string(list.size()) + " parameters, model expects " +
                             std::to_string(params.size()));
  }
  for (const auto& entry : list) {
    const auto name = entry.at("name").get<std::string>();
    if (!params.contains(name)) throw std::runtime_error("checkpoint parameter '" + name + "' not in model");
    ad::Tensor t = params.at(name);
    if (entry.at("shape").get<ad::Shape>() != t.shape()) {
      throw std::runtime_error("shape mismatch for parameter '" + name + "'");
    }
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    if ((offset + t.numel()) * 8 > blob.size()) throw std::runtime_error("checkpoint blob truncated");
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = read_le(blob.data() + (offset + i) * 8);
  }
  return info;
}

}  // namespace ilvm
