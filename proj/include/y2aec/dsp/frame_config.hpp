#pragma once

#include <complex>
#include <vector>

namespace y2aec::dsp {

/// Framing parameters of the streaming front-end. Defaults give a 26.5 ms
/// frame with 50% shift at 16 kHz, a 512-point DFT and a 260-row feature
/// axis (257 bins + 3 padding rows).
struct FrameConfig {
  int sample_rate_hz = 16000;
  int frame_len = 424;
  int frame_shift = 212;
  int dft_size = 512;
  int n_bins = 257;
  int feature_dim = 260;

  /// Algorithmic latency in milliseconds: frame length plus one shift.
  double algorithmic_latency_ms() const {
    return double(frame_len + frame_shift) * 1000.0 / double(sample_rate_hz);
  }

  /// Throws std::invalid_argument if any structural invariant is violated.
  void validate() const;
};

struct Signal {
  std::vector<float> samples;
  int sample_rate_hz = 16000;

  size_t size() const { return samples.size(); }
};

using Spectrum = std::vector<std::complex<float>>;

struct SpectrumSeq {
  std::vector<Spectrum> frames;
  FrameConfig config;

  size_t num_frames() const { return frames.size(); }
};

}  // namespace y2aec::dsp
