#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "y2aec/dsp/frame_config.hpp"

namespace testutil {

inline std::vector<float> white_noise(size_t n, uint32_t seed, float amp = 0.5f) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-amp, amp);
  std::vector<float> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline y2aec::dsp::Signal noise_signal(size_t n, uint32_t seed, float amp = 0.5f) {
  return {white_noise(n, seed, amp), 16000};
}

inline double rel_l2_error(const std::vector<float>& a, const std::vector<float>& b, size_t begin,
                           size_t end) {
  double num = 0.0, den = 0.0;
  for (size_t i = begin; i < end; ++i) {
    const double d = double(a[i]) - double(b[i]);
    num += d * d;
    den += double(a[i]) * double(a[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// O(n^2) reference DFT of a real frame (independent of the fft module).
inline std::vector<std::complex<double>> brute_dft(const std::vector<float>& frame, int n) {
  std::vector<std::complex<double>> out(size_t(n) / 2 + 1);
  for (size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (size_t i = 0; i < frame.size(); ++i) {
      const double ang = -2.0 * std::numbers::pi * double(k) * double(i) / double(n);
      acc += double(frame[i]) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace testutil
