#pragma once

// Checkpoint format: <prefix>.json manifest (parameter names, shapes, offsets,
// model kind, config and config hash) plus <prefix>.bin, a little-endian
// float64 blob with the parameters concatenated in lexicographic name order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ilvm/nn.hpp"

namespace ilvm {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
/// Hash of the canonical (sorted-key, compact) JSON dump.
std::string config_hash(const nlohmann::json& config);

struct CheckpointInfo {
  std::string model_kind;
  nlohmann::json config;
  std::string config_hash;
  std::string blob_hash;
  nlohmann::json provenance;
};

/// Writes <prefix>.json and <prefix>.bin. Returns the blob hash.
std::string save_checkpoint(const std::filesystem::path& prefix, const nn::ParameterSet& params,
                            const std::string& model_kind, const nlohmann::json& config,
                            const nlohmann::json& provenance = nlohmann::json::object());

CheckpointInfo read_checkpoint_info(const std::filesystem::path& prefix);

/// Loads values into an already-constructed parameter set. Names and shapes
/// must match exactly.
CheckpointInfo load_checkpoint(const std::filesystem::path& prefix, nn::ParameterSet& params);

/// Serialises parameter values to the blob layout (used for hashing).
std::string parameter_blob(const nn::ParameterSet& params);

}  // namespace ilvm
