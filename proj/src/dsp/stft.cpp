#include "y2aec/dsp/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "y2aec/dsp/fft.hpp"

namespace y2aec::dsp {

void FrameConfig::validate() const {
  if (sample_rate_hz <= 0) throw std::invalid_argument("FrameConfig: bad sample rate");
  if (frame_len <= 0 || frame_shift <= 0) throw std::invalid_argument("FrameConfig: bad frame geometry");
  if (frame_shift * 2 != frame_len) throw std::invalid_argument("FrameConfig: frame_shift must be frame_len/2");
  if (dft_size < frame_len) throw std::invalid_argument("FrameConfig: dft_size < frame_len");
  if (n_bins != dft_size / 2 + 1) throw std::invalid_argument("FrameConfig: n_bins must be dft_size/2+1");
  if (feature_dim < n_bins || feature_dim % 4 != 0)
    throw std::invalid_argument("FrameConfig: feature_dim must be >= n_bins and divisible by 4");
  if (algorithmic_latency_ms() > 40.0) throw std::invalid_argument("FrameConfig: latency exceeds 40 ms");
}

std::vector<float> sqrt_hann_window(int len) {
  if (len <= 0) throw std::invalid_argument("sqrt_hann_window: bad length");
  std::vector<float> w(static_cast<size_t>(len), 0.0f);
  for (int n = 0; n < len; ++n) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(n) / double(len));
    w[size_t(n)] = float(std::sqrt(hann));
  }
  return w;
}

Signal highpass(const Signal& in, double r) {
  if (in.samples.empty()) throw std::invalid_argument("highpass: empty signal");
  DcBlocker hp(r);
  Signal out;
  out.sample_rate_hz = in.sample_rate_hz;
  out.samples.resize(in.samples.size());
  for (size_t i = 0; i < in.samples.size(); ++i) out.samples[i] = hp.process(in.samples[i]);
  return out;
}

OlaSynthesizer::OlaSynthesizer(const FrameConfig& cfg)
    : cfg_(cfg), window_(sqrt_hann_window(cfg.frame_len)), overlap_(size_t(cfg.frame_len), 0.0f) {
  cfg_.validate();
}

std::vector<float> OlaSynthesizer::push(const Spectrum& frame) {
  if (int(frame.size()) != cfg_.n_bins) throw std::invalid_argument("OlaSynthesizer: wrong bin count");
  const auto time = irdft(frame, cfg_.dft_size);
  for (int n = 0; n < cfg_.frame_len; ++n) overlap_[size_t(n)] += time[size_t(n)] * window_[size_t(n)];

  const int shift = cfg_.frame_shift;
  std::vector<float> out(overlap_.begin(), overlap_.begin() + shift);
  std::copy(overlap_.begin() + shift, overlap_.end(), overlap_.begin());
  std::fill(overlap_.end() - shift, overlap_.end(), 0.0f);
  return out;
}

std::vector<float> OlaSynthesizer::flush() {
  const int tail = cfg_.frame_len - cfg_.frame_shift;
  std::vector<float> out(overlap_.begin(), overlap_.begin() + tail);
  reset();
  return out;
}

void OlaSynthesizer::reset() { std::fill(overlap_.begin(), overlap_.end(), 0.0f); }

SpectrumSeq analyze(const Signal& signal, const FrameConfig& cfg) {
  cfg.validate();
  const int len = int(signal.samples.size());
  if (len < cfg.frame_len) throw std::invalid_argument("analyze: signal shorter than one frame");

  const auto window = sqrt_hann_window(cfg.frame_len);
  const int num_frames = (len - cfg.frame_len) / cfg.frame_shift + 1;

  SpectrumSeq seq;
  seq.config = cfg;
  seq.frames.reserve(size_t(num_frames));
  std::vector<float> buf(static_cast<size_t>(cfg.frame_len), 0.0f);
  for (int l = 0; l < num_frames; ++l) {
    const float* src = signal.samples.data() + size_t(l) * size_t(cfg.frame_shift);
    for (int n = 0; n < cfg.frame_len; ++n) buf[size_t(n)] = src[n] * window[size_t(n)];
    seq.frames.push_back(rdft(buf, cfg.dft_size));
  }
  return seq;
}

Signal synthesize(const SpectrumSeq& spectra) {
  if (spectra.frames.empty()) throw std::invalid_argument("synthesize: no frames");
  for (const auto& f : spectra.frames)
    if (int(f.size()) != spectra.config.n_bins)
      throw std::invalid_argument("synthesize: inconsistent frame lengths");

  OlaSynthesizer ola(spectra.config);
  Signal out;
  out.sample_rate_hz = spectra.config.sample_rate_hz;
  out.samples.reserve((spectra.frames.size() - 1) * size_t(spectra.config.frame_shift) +
                      size_t(spectra.config.frame_len));
  for (const auto& f : spectra.frames) {
    const auto chunk = ola.push(f);
    out.samples.insert(out.samples.end(), chunk.begin(), chunk.end());
  }
  const auto tail = ola.flush();
  out.samples.insert(out.samples.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace y2aec::dsp
