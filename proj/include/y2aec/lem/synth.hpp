#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "y2aec/dsp/frame_config.hpp"
#include "y2aec/util/manifest.hpp"

namespace y2aec::lem {

enum class TalkType { Double, FeOnly, NeOnly };

enum class DistortionKind { None, HardClip, SoftTanh };

struct Distortion {
  DistortionKind kind = DistortionKind::None;
  double param = 1.0;  // clip level c, or tanh drive g
};

/// Draw record for one synthetic utterance; fully determined by its seed.
struct SynthScenario {
  uint64_t seed = 0;
  double t60_s = 0.5;
  double ser_db = 0.0;
  double snr_db = 20.0;
  bool nonlinear = false;
  Distortion distortion;
  TalkType talk_type = TalkType::Double;

  void validate() const;
};

/// Five aligned tracks; y = s + d + n holds sample-exact (all tracks are
/// quantized to the 16-bit grid before the sum is formed).
struct UtteranceBundle {
  dsp::Signal x, y, s, d, n;
};

/// Amplitude decay envelope exp(-3 ln10 t / T60): -60 dB energy at t = T60.
double ir_decay_envelope(int n, double t60_s, int sample_rate);

/// Exponentially decaying white-noise impulse response with a unit direct-
/// path spike at n = 0, normalized to unit energy.
std::vector<float> gen_ir(double t60_s, int length, uint64_t seed, int sample_rate = 16000);

/// Memoryless loudspeaker nonlinearity. hard_clip clamps to [-c, c];
/// soft_tanh is tanh(g x)/g, which keeps unit slope at 0 and approaches
/// the identity as g -> 0.
dsp::Signal nonlinear_distort(const dsp::Signal& x, const Distortion& d);

/// Echo path: distort the far-end signal, convolve with the impulse
/// response, truncate back to the input length.
dsp::Signal make_echo(const dsp::Signal& x, const std::vector<float>& ir, const Distortion& d);

/// Scales d to the requested SER and n to the requested SNR (both relative
/// to the near-end speech power over speech-active samples), quantizes the
/// components to the 16-bit grid and forms y = s + d + n exactly. A whole-
/// bundle rescale is applied when the sum would clip. The x track is left
/// empty; the dataset builder fills it.
///
/// A nullopt SER leaves d unscaled (far-end-only material); SNR then uses
/// the echo as the power reference when the near end is silent.
UtteranceBundle mix(const dsp::Signal& s, const dsp::Signal& d, const dsp::Signal& n,
                    std::optional<double> ser_db, std::optional<double> snr_db);

/// Energy-threshold activity mask: 20 ms frames whose mean power is within
/// 40 dB of the loudest frame.
std::vector<bool> activity_mask(const dsp::Signal& s);

struct PoolPaths {
  std::vector<std::filesystem::path> fe;
  std::vector<std::filesystem::path> ne;
  std::vector<std::filesystem::path> noise;
};

struct DatasetConfig {
  int num_utterances = 10;
  uint64_t seed = 1;
  double duration_s = 10.0;
  std::pair<double, double> t60_range{0.2, 1.2};
  std::pair<double, double> ser_range{-10.0, 10.0};
  std::pair<double, double> snr_range{0.0, 40.0};
  double nonlinear_prob = 0.8;
  TalkType talk_type = TalkType::Double;
  bool mixed_talk = false;  // draw the talk type per utterance
};

/// Writes per-utterance wav quintuples (x, y, s, d, n) plus manifest.jsonl
/// into out_dir. Deterministic under (config.seed, utterance index).
std::vector<util::ManifestEntry> synth_dataset(const DatasetConfig& cfg, const PoolPaths& pools,
                                               const std::filesystem::path& out_dir);

/// Self-contained source material for demos and tests: band-limited
/// speech-like bursts and shaped noise, written as wav pools.
PoolPaths write_demo_pools(const std::filesystem::path& dir, uint64_t seed, int per_pool = 4,
                           double duration_s = 11.0);

const char* to_string(TalkType t);
const char* to_string(DistortionKind k);

}  // namespace y2aec::lem
