#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "y2aec/tc/param.hpp"

namespace y2aec::tc {

/// FNV-1a 64-bit digest, used to fingerprint the architecture config that
/// a checkpoint was written for.
uint64_t fnv1a64(const std::string& bytes);

/// Binary checkpoint container (see README for the byte-exact layout):
/// magic "Y2NC", version, config digest, config JSON, then named float32
/// little-endian parameter records. Adam state is not persisted.
void save_checkpoint(const std::filesystem::path& path, const std::string& config_json,
                     const ParamSet& params);

struct Checkpoint {
  std::string config_json;
  uint64_t config_digest = 0;
  ParamSet params;
};

/// Loads and validates magic, version and the stored digest. When
/// `expected_config_json` is non-empty its digest must match the file's.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::string& expected_config_json = "");

}  // namespace y2aec::tc
