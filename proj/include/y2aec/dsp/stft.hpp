#pragma once

#include <span>
#include <vector>

#include "y2aec/dsp/frame_config.hpp"

namespace y2aec::dsp {

/// Square root of a periodic Hann window; satisfies the constant
/// overlap-add condition at 50% shift when applied on both sides.
std::vector<float> sqrt_hann_window(int len);

/// First-order DC blocker y(n) = x(n) - x(n-1) + r*y(n-1).
class DcBlocker {
 public:
  explicit DcBlocker(double r = 0.99) : r_(r) {}

  float process(float x) {
    const double y = double(x) - prev_x_ + r_ * prev_y_;
    prev_x_ = double(x);
    prev_y_ = y;
    return float(y);
  }

  void reset() { prev_x_ = prev_y_ = 0.0; }

 private:
  double r_;
  double prev_x_ = 0.0;
  double prev_y_ = 0.0;
};

/// Applies the DC blocker causally over a whole signal, fresh state.
Signal highpass(const Signal& in, double r = 0.99);

/// Streaming overlap-add synthesis: each pushed frame yields `frame_shift`
/// finalized output samples; flush() returns the remaining tail.
class OlaSynthesizer {
 public:
  explicit OlaSynthesizer(const FrameConfig& cfg);

  /// Inverse DFT + truncation to frame_len + synthesis window + OLA.
  std::vector<float> push(const Spectrum& frame);
  std::vector<float> flush();
  void reset();

 private:
  FrameConfig cfg_;
  std::vector<float> window_;
  std::vector<float> overlap_;
};

/// Frame, window (sqrt Hann), zero-pad to the DFT size and transform.
/// Only complete frames are produced; frame l covers samples
/// [l*shift, l*shift + frame_len).
SpectrumSeq analyze(const Signal& signal, const FrameConfig& cfg);

/// Inverse of analyze via overlap-add. Output length is
/// (num_frames-1)*shift + frame_len.
Signal synthesize(const SpectrumSeq& spectra);

}  // namespace y2aec::dsp
