#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace y2aec::util {

/// One dataset row, serialized as a JSON object per line. Synthetic rows
/// carry all five tracks; externally supplied data may omit the component
/// tracks (s, d, n) and provide only x and y.
struct ManifestEntry {
  std::string id;
  uint64_t seed = 0;
  double t60_s = 0.0;
  double ser_db = 0.0;
  double snr_db = 0.0;
  bool nonlinear = false;
  std::string distortion_kind = "none";
  double distortion_param = 0.0;
  std::string talk_type = "double";
  std::string x, y, s, d, n;  // wav paths, relative to the manifest

  bool has_components() const { return !s.empty() && !d.empty() && !n.empty(); }
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// Resolves a manifest-relative track path against the manifest directory;
/// the Y2AEC_DATA_ROOT environment variable overrides the base directory.
std::filesystem::path resolve_track(const std::filesystem::path& manifest_dir,
                                    const std::string& track);

}  // namespace y2aec::util
