#include "y2aec/tc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace y2aec::tc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'Y', '2', 'N', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::vector<uint8_t>& b, T v) {
  const size_t at = b.size();
  b.resize(at + sizeof(T));
  std::memcpy(b.data() + at, &v, sizeof(T));
}

template <typename T>
T take(const std::vector<uint8_t>& b, size_t& pos) {
  if (pos + sizeof(T) > b.size()) throw std::runtime_error("checkpoint: truncated file");
  T v;
  std::memcpy(&v, b.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= uint64_t(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const std::string& config_json,
                     const ParamSet& params) {
  std::vector<uint8_t> b;
  b.insert(b.end(), kMagic, kMagic + 4);
  put<uint32_t>(b, kVersion);
  put<uint32_t>(b, 0);  // flags, reserved
  put<uint64_t>(b, fnv1a64(config_json));
  put<uint32_t>(b, uint32_t(config_json.size()));
  b.insert(b.end(), config_json.begin(), config_json.end());
  put<uint32_t>(b, uint32_t(params.size()));
  for (const auto& p : params.items()) {
    if (p.name.size() > 0xffff) throw std::invalid_argument("checkpoint: parameter name too long");
    put<uint16_t>(b, uint16_t(p.name.size()));
    b.insert(b.end(), p.name.begin(), p.name.end());
    put<uint8_t>(b, uint8_t(p.shape.size()));
    for (int d : p.shape) put<uint32_t>(b, uint32_t(d));
    const size_t at = b.size();
    b.resize(at + p.value.size() * 4);
    std::memcpy(b.data() + at, p.value.data(), p.value.size() * 4);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::string& expected_config_json) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::vector<uint8_t> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  if (b.size() < 4 || std::memcmp(b.data(), kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  pos = 4;
  const uint32_t version = take<uint32_t>(b, pos);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  take<uint32_t>(b, pos);  // flags
  const uint64_t digest = take<uint64_t>(b, pos);
  const uint32_t cfg_len = take<uint32_t>(b, pos);
  if (pos + cfg_len > b.size()) throw std::runtime_error("checkpoint: truncated config");
  std::string config_json(reinterpret_cast<const char*>(b.data() + pos), cfg_len);
  pos += cfg_len;
  if (fnv1a64(config_json) != digest)
    throw std::runtime_error("checkpoint: config digest mismatch (corrupt file)");
  if (!expected_config_json.empty() && fnv1a64(expected_config_json) != digest)
    throw std::runtime_error("checkpoint: architecture mismatch for " + path.string());

  Checkpoint ck;
  ck.config_json = std::move(config_json);
  ck.config_digest = digest;
  const uint32_t count = take<uint32_t>(b, pos);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = take<uint16_t>(b, pos);
    if (pos + name_len > b.size()) throw std::runtime_error("checkpoint: truncated name");
    std::string name(reinterpret_cast<const char*>(b.data() + pos), name_len);
    pos += name_len;
    const uint8_t ndim = take<uint8_t>(b, pos);
    Shape shape(ndim);
    size_t numel = 1;
    for (auto& d : shape) {
      d = int(take<uint32_t>(b, pos));
      numel *= size_t(d);
    }
    if (pos + numel * 4 > b.size()) throw std::runtime_error("checkpoint: truncated values");
    std::vector<float> values(numel);
    std::memcpy(values.data(), b.data() + pos, numel * 4);
    pos += numel * 4;
    ck.params.add(std::move(name), std::move(shape), std::move(values));
  }
  return ck;
}

}  // namespace y2aec::tc
