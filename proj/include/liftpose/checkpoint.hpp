#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "liftpose/param_store.hpp"

namespace liftpose {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::string representation;
  std::uint64_t seed = 0;
  /// Full configuration used to rebuild the models (JSON text).
  std::string config_json;
  std::string config_hash;
  std::int64_t epoch = 0;
};

/// Named parameter stores plus random stream positions. The byte layout is
/// documented in docs/FORMATS.md; save/load round trips are bit-exact.
struct Checkpoint {
  CheckpointHeader header;
  std::map<std::string, ParamStore> stores;
  std::map<std::string, std::string> rng_states;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64-bit hash, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace liftpose
