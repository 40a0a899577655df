#pragma once

#include <cstdint>
#include <filesystem>

#include "y2aec/dsp/frame_config.hpp"

namespace y2aec::dsp {

/// Mono 16-bit PCM little-endian only; samples mapped to [-1, 1) via /32768.
Signal read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM; samples are rounded and clamped to int16 range.
void write_wav(const std::filesystem::path& path, const Signal& signal);

inline int16_t float_to_i16(float x) {
  const float scaled = x * 32768.0f;
  const float r = std::round(scaled);
  if (r >= 32767.0f) return 32767;
  if (r <= -32768.0f) return -32768;
  return int16_t(r);
}

inline float i16_to_float(int16_t v) { return float(v) / 32768.0f; }

}  // namespace y2aec::dsp
