#include "y2aec/dsp/wav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace y2aec::dsp {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void wr_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(uint8_t(v)); b.push_back(uint8_t(v >> 8));
  b.push_back(uint8_t(v >> 16)); b.push_back(uint8_t(v >> 24));
}
void wr_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(uint8_t(v)); b.push_back(uint8_t(v >> 8));
}

}  // namespace

Signal read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_wav: cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path.string());

  int sample_rate = 0;
  int channels = 0;
  int bits = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t sz = rd_u32(bytes.data() + pos + 4);
    const uint8_t* body = bytes.data() + pos + 8;
    if (pos + 8 + sz > bytes.size()) break;
    if (std::memcmp(id, "fmt ", 4) == 0 && sz >= 16) {
      const uint16_t format = rd_u16(body);
      channels = rd_u16(body + 2);
      sample_rate = int(rd_u32(body + 4));
      bits = rd_u16(body + 14);
      if (format != 1) throw std::runtime_error("read_wav: only PCM supported: " + path.string());
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = body;
      data_len = sz;
    }
    pos += 8 + sz + (sz & 1);  // chunks are word aligned
  }

  if (!data || sample_rate == 0) throw std::runtime_error("read_wav: missing chunks: " + path.string());
  if (channels != 1) throw std::runtime_error("read_wav: mono required: " + path.string());
  if (bits != 16) throw std::runtime_error("read_wav: 16-bit PCM required: " + path.string());

  Signal s;
  s.sample_rate_hz = sample_rate;
  s.samples.resize(data_len / 2);
  for (size_t i = 0; i < s.samples.size(); ++i) {
    const int16_t v = int16_t(rd_u16(data + 2 * i));
    s.samples[i] = i16_to_float(v);
  }
  return s;
}

void write_wav(const std::filesystem::path& path, const Signal& signal) {
  const uint32_t n = uint32_t(signal.samples.size());
  const uint32_t data_bytes = n * 2;

  std::vector<uint8_t> b;
  b.reserve(44 + data_bytes);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  wr_u32(b, 36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E'});
  b.insert(b.end(), {'f', 'm', 't', ' '});
  wr_u32(b, 16);
  wr_u16(b, 1);  // PCM
  wr_u16(b, 1);  // mono
  wr_u32(b, uint32_t(signal.sample_rate_hz));
  wr_u32(b, uint32_t(signal.sample_rate_hz) * 2);
  wr_u16(b, 2);
  wr_u16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  wr_u32(b, data_bytes);
  for (float x : signal.samples) wr_u16(b, uint16_t(float_to_i16(x)));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  if (!f) throw std::runtime_error("write_wav: write failed: " + path.string());
}

}  // namespace y2aec::dsp
