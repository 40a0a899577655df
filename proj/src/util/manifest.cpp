#include "y2aec/util/manifest.hpp"

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace y2aec::util {

using nlohmann::json;

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest: parse error at line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.seed = j.value("seed", uint64_t(0));
    e.t60_s = j.value("t60_s", 0.0);
    e.ser_db = j.value("ser_db", 0.0);
    e.snr_db = j.value("snr_db", 0.0);
    e.nonlinear = j.value("nonlinear", false);
    e.distortion_kind = j.value("distortion_kind", std::string("none"));
    e.distortion_param = j.value("distortion_param", 0.0);
    e.talk_type = j.value("talk_type", std::string("double"));
    e.x = j.at("x").get<std::string>();
    e.y = j.at("y").get<std::string>();
    e.s = j.value("s", std::string());
    e.d = j.value("d", std::string());
    e.n = j.value("n", std::string());
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("manifest: cannot open " + path.string());
  for (const auto& e : entries) {
    json j{{"id", e.id},
           {"seed", e.seed},
           {"t60_s", e.t60_s},
           {"ser_db", e.ser_db},
           {"snr_db", e.snr_db},
           {"nonlinear", e.nonlinear},
           {"distortion_kind", e.distortion_kind},
           {"distortion_param", e.distortion_param},
           {"talk_type", e.talk_type},
           {"x", e.x},
           {"y", e.y}};
    if (!e.s.empty()) j["s"] = e.s;
    if (!e.d.empty()) j["d"] = e.d;
    if (!e.n.empty()) j["n"] = e.n;
    f << j.dump() << "\n";
  }
  if (!f) throw std::runtime_error("manifest: write failed " + path.string());
}

std::filesystem::path resolve_track(const std::filesystem::path& manifest_dir,
                                    const std::string& track) {
  std::filesystem::path p(track);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("Y2AEC_DATA_ROOT")) return std::filesystem::path(root) / p;
  return manifest_dir / p;
}

}  // namespace y2aec::util
