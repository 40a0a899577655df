#include "y2aec/lem/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "y2aec/dsp/fft.hpp"
#include "y2aec/dsp/wav.hpp"

namespace y2aec::lem {

namespace fs = std::filesystem;

const char* to_string(TalkType t) {
  switch (t) {
    case TalkType::Double: return "double";
    case TalkType::FeOnly: return "fe_only";
    case TalkType::NeOnly: return "ne_only";
  }
  return "double";
}

const char* to_string(DistortionKind k) {
  switch (k) {
    case DistortionKind::None: return "none";
    case DistortionKind::HardClip: return "hard_clip";
    case DistortionKind::SoftTanh: return "soft_tanh";
  }
  return "none";
}

void SynthScenario::validate() const {
  if (t60_s < 0.2 || t60_s > 1.2) throw std::invalid_argument("scenario: T60 outside [0.2, 1.2] s");
  if (ser_db < -10.0 || ser_db > 10.0) throw std::invalid_argument("scenario: SER outside [-10, 10] dB");
  if (snr_db < 0.0 || snr_db > 40.0) throw std::invalid_argument("scenario: SNR outside [0, 40] dB");
  if (nonlinear && distortion.kind == DistortionKind::None)
    throw std::invalid_argument("scenario: nonlinear flag without a distortion kind");
}

double ir_decay_envelope(int n, double t60_s, int sample_rate) {
  const double t = double(n) / double(sample_rate);
  return std::exp(-3.0 * std::numbers::ln10 * t / t60_s);
}

std::vector<float> gen_ir(double t60_s, int length, uint64_t seed, int sample_rate) {
  if (t60_s <= 0.0) throw std::invalid_argument("gen_ir: T60 must be positive");
  if (length < 1) throw std::invalid_argument("gen_ir: length must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);

  std::vector<float> h(static_cast<size_t>(length), 0.0f);
  h[0] = 1.0f;  // direct path
  for (int n = 1; n < length; ++n)
    h[size_t(n)] = float(g(rng) * ir_decay_envelope(n, t60_s, sample_rate));

  double energy = 0.0;
  for (float v : h) energy += double(v) * v;
  const float norm = float(1.0 / std::sqrt(energy));
  for (auto& v : h) v *= norm;
  return h;
}

dsp::Signal nonlinear_distort(const dsp::Signal& x, const Distortion& d) {
  dsp::Signal out = x;
  switch (d.kind) {
    case DistortionKind::None:
      break;
    case DistortionKind::HardClip: {
      if (d.param <= 0.0) throw std::invalid_argument("nonlinear_distort: clip level must be > 0");
      const float c = float(d.param);
      for (auto& v : out.samples) v = std::clamp(v, -c, c);
      break;
    }
    case DistortionKind::SoftTanh: {
      if (d.param <= 0.0) throw std::invalid_argument("nonlinear_distort: tanh drive must be > 0");
      const float g = float(d.param);
      for (auto& v : out.samples) v = std::tanh(g * v) / g;
      break;
    }
  }
  return out;
}

namespace {

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<float> fft_convolve(const std::vector<float>& x, const std::vector<float>& h) {
  const size_t out_len = x.size() + h.size() - 1;
  const size_t n = next_pow2(out_len);
  std::vector<std::complex<float>> fx(n), fh(n);
  for (size_t i = 0; i < x.size(); ++i) fx[i] = {x[i], 0.0f};
  for (size_t i = 0; i < h.size(); ++i) fh[i] = {h[i], 0.0f};
  dsp::fft(fx, false);
  dsp::fft(fh, false);
  for (size_t i = 0; i < n; ++i) fx[i] *= fh[i];
  dsp::fft(fx, true);
  std::vector<float> out(out_len);
  for (size_t i = 0; i < out_len; ++i) out[i] = fx[i].real();
  return out;
}

}  // namespace

dsp::Signal make_echo(const dsp::Signal& x, const std::vector<float>& ir, const Distortion& d) {
  if (ir.empty()) throw std::invalid_argument("make_echo: empty impulse response");
  const auto driven = nonlinear_distort(x, d);
  auto full = fft_convolve(driven.samples, ir);
  full.resize(x.samples.size());
  return {std::move(full), x.sample_rate_hz};
}

std::vector<bool> activity_mask(const dsp::Signal& s) {
  const int frame = s.sample_rate_hz / 50;  // 20 ms
  const size_t n = s.samples.size();
  const size_t frames = (n + size_t(frame) - 1) / size_t(frame);
  std::vector<double> power(frames, 0.0);
  double peak = 0.0;
  for (size_t f = 0; f < frames; ++f) {
    const size_t begin = f * size_t(frame);
    const size_t end = std::min(n, begin + size_t(frame));
    double acc = 0.0;
    for (size_t i = begin; i < end; ++i) acc += double(s.samples[i]) * s.samples[i];
    power[f] = acc / double(end - begin);
    peak = std::max(peak, power[f]);
  }
  std::vector<bool> mask(n, false);
  if (peak <= 0.0) return mask;
  const double threshold = peak * 1e-4;  // -40 dB
  for (size_t f = 0; f < frames; ++f) {
    if (power[f] <= threshold) continue;
    const size_t begin = f * size_t(frame);
    const size_t end = std::min(n, begin + size_t(frame));
    for (size_t i = begin; i < end; ++i) mask[i] = true;
  }
  return mask;
}

namespace {

double masked_power(const std::vector<float>& v, const std::vector<bool>& mask) {
  double acc = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    if (!mask[i]) continue;
    acc += double(v[i]) * v[i];
    ++count;
  }
  return count ? acc / double(count) : 0.0;
}

void scale_in_place(std::vector<float>& v, double gamma) {
  for (auto& x : v) x = float(double(x) * gamma);
}

}  // namespace

UtteranceBundle mix(const dsp::Signal& s, const dsp::Signal& d, const dsp::Signal& n,
                    std::optional<double> ser_db, std::optional<double> snr_db) {
  if (s.samples.size() != d.samples.size() || s.samples.size() != n.samples.size())
    throw std::invalid_argument("mix: track lengths differ");
  if (s.samples.empty()) throw std::invalid_argument("mix: empty tracks");

  std::vector<float> sv = s.samples, dv = d.samples, nv = n.samples;

  const auto s_mask = activity_mask(s);
  const bool s_active = std::find(s_mask.begin(), s_mask.end(), true) != s_mask.end();
  const double p_s = s_active ? masked_power(sv, s_mask) : 0.0;

  if (ser_db) {
    if (!s_active || p_s <= 0.0)
      throw std::invalid_argument("mix: SER requested but near-end speech is silent");
    const double p_d = masked_power(dv, s_mask);
    if (p_d <= 0.0) throw std::invalid_argument("mix: SER requested but echo is silent");
    scale_in_place(dv, std::sqrt(p_s / (p_d * std::pow(10.0, *ser_db / 10.0))));
  }

  if (snr_db) {
    // power reference: near-end speech when present, otherwise the echo
    const auto ref_mask = s_active ? s_mask : activity_mask({dv, d.sample_rate_hz});
    const double p_ref = s_active ? p_s : masked_power(dv, ref_mask);
    if (p_ref <= 0.0) throw std::invalid_argument("mix: SNR requested but reference is silent");
    const double p_n = masked_power(nv, ref_mask);
    if (p_n <= 0.0) throw std::invalid_argument("mix: SNR requested but noise is silent");
    scale_in_place(nv, std::sqrt(p_ref / (p_n * std::pow(10.0, *snr_db / 10.0))));
  }

  // quantize-then-sum; rescale everything if the sum would clip
  for (int attempt = 0;; ++attempt) {
    float peak = 0.0f;
    for (size_t i = 0; i < sv.size(); ++i) {
      const float sum = std::abs(sv[i] + dv[i] + nv[i]);
      peak = std::max({peak, sum, std::abs(sv[i]), std::abs(dv[i]), std::abs(nv[i])});
    }
    if (peak * 32768.0f <= 32766.0f) break;
    if (attempt >= 4) throw std::runtime_error("mix: failed to fit the mixture into 16 bits");
    const double gamma = 32766.0 / (double(peak) * 32768.0);
    scale_in_place(sv, gamma);
    scale_in_place(dv, gamma);
    scale_in_place(nv, gamma);
  }

  UtteranceBundle b;
  const int rate = s.sample_rate_hz;
  b.s.sample_rate_hz = b.d.sample_rate_hz = b.n.sample_rate_hz = b.y.sample_rate_hz = rate;
  b.s.samples.resize(sv.size());
  b.d.samples.resize(sv.size());
  b.n.samples.resize(sv.size());
  b.y.samples.resize(sv.size());
  for (size_t i = 0; i < sv.size(); ++i) {
    const int16_t si = dsp::float_to_i16(sv[i]);
    const int16_t di = dsp::float_to_i16(dv[i]);
    const int16_t ni = dsp::float_to_i16(nv[i]);
    b.s.samples[i] = dsp::i16_to_float(si);
    b.d.samples[i] = dsp::i16_to_float(di);
    b.n.samples[i] = dsp::i16_to_float(ni);
    const int32_t yi = int32_t(si) + di + ni;
    if (yi < -32768 || yi > 32767) throw std::runtime_error("mix: quantized sum out of range");
    b.y.samples[i] = dsp::i16_to_float(int16_t(yi));
  }
  return b;
}

// ---------------------------------------------------------------------------
// demo source material

namespace {

/// Band-limited voiced bursts with a wandering pitch, syllabic envelope and
/// a soft noise floor. Not speech, but spectrally and temporally busy
/// enough to train and evaluate against.
std::vector<float> speech_like(size_t len, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0_base = 90.0 + 130.0 * u(rng);
  const double syllable_hz = 2.5 + 1.5 * u(rng);
  const double vibrato = 0.04 + 0.05 * u(rng);

  std::vector<float> out(len);
  double phase[6] = {0};
  double amp_lfo_phase = 2.0 * std::numbers::pi * u(rng);
  std::normal_distribution<double> gn(0.0, 1.0);
  double noise_state = 0.0;
  for (size_t i = 0; i < len; ++i) {
    const double t = double(i) / rate;
    const double f0 = f0_base * (1.0 + vibrato * std::sin(2.0 * std::numbers::pi * 0.7 * t));
    double v = 0.0;
    for (int k = 0; k < 6; ++k) {
      phase[k] += 2.0 * std::numbers::pi * f0 * (k + 1) / rate;
      v += std::sin(phase[k]) / double((k + 1) * (k + 1));
    }
    // syllabic gating with pauses
    const double g = std::sin(2.0 * std::numbers::pi * syllable_hz * t + amp_lfo_phase);
    const double gate = g > -0.2 ? (g + 0.2) / 1.2 : 0.0;
    noise_state = 0.97 * noise_state + 0.03 * gn(rng);
    out[i] = float(0.35 * v * gate * gate + 0.01 * noise_state);
  }
  return out;
}

std::vector<float> shaped_noise(size_t len, std::mt19937_64& rng) {
  std::normal_distribution<double> gn(0.0, 1.0);
  std::vector<float> out(len);
  double state = 0.0;
  for (auto& v : out) {
    state = 0.9 * state + 0.1 * gn(rng);
    v = float(state);
  }
  double rms = 0.0;
  for (float v : out) rms += double(v) * v;
  rms = std::sqrt(rms / double(len));
  const float norm = float(0.12 / std::max(rms, 1e-9));
  for (auto& v : out) v *= norm;
  return out;
}

}  // namespace

PoolPaths write_demo_pools(const fs::path& dir, uint64_t seed, int per_pool, double duration_s) {
  fs::create_directories(dir);
  const int rate = 16000;
  const size_t len = size_t(duration_s * rate);
  PoolPaths pools;
  for (int i = 0; i < per_pool; ++i) {
    std::mt19937_64 rng(seed * 1000003 + uint64_t(i));
    const auto fe = dir / ("fe_" + std::to_string(i) + ".wav");
    dsp::write_wav(fe, {speech_like(len, rate, rng), rate});
    pools.fe.push_back(fe);

    const auto ne = dir / ("ne_" + std::to_string(i) + ".wav");
    dsp::write_wav(ne, {speech_like(len, rate, rng), rate});
    pools.ne.push_back(ne);

    const auto nz = dir / ("noise_" + std::to_string(i) + ".wav");
    dsp::write_wav(nz, {shaped_noise(len, rng), rate});
    pools.noise.push_back(nz);
  }
  return pools;
}

// ---------------------------------------------------------------------------
// dataset synthesis

namespace {

std::vector<float> fit_length(const std::vector<float>& src, size_t len, std::mt19937_64& rng) {
  if (src.empty()) throw std::runtime_error("synth: empty source wav");
  std::vector<float> out(len);
  if (src.size() >= len) {
    std::uniform_int_distribution<size_t> off(0, src.size() - len);
    const size_t o = off(rng);
    std::copy_n(src.begin() + long(o), len, out.begin());
  } else {
    for (size_t i = 0; i < len; ++i) out[i] = src[i % src.size()];
  }
  return out;
}

SynthScenario draw_scenario(const DatasetConfig& cfg, int index) {
  std::seed_seq seq{uint32_t(cfg.seed), uint32_t(cfg.seed >> 32), uint32_t(index), 0xd1ce5u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  SynthScenario sc;
  sc.seed = rng();
  sc.t60_s = cfg.t60_range.first + (cfg.t60_range.second - cfg.t60_range.first) * u(rng);
  sc.ser_db = cfg.ser_range.first + (cfg.ser_range.second - cfg.ser_range.first) * u(rng);
  sc.snr_db = cfg.snr_range.first + (cfg.snr_range.second - cfg.snr_range.first) * u(rng);
  sc.nonlinear = u(rng) < cfg.nonlinear_prob;
  if (sc.nonlinear) {
    if (u(rng) < 0.5)
      sc.distortion = {DistortionKind::HardClip, 0.3 + 0.6 * u(rng)};
    else
      sc.distortion = {DistortionKind::SoftTanh, 1.0 + 3.0 * u(rng)};
  }
  if (cfg.mixed_talk) {
    const double r = u(rng);
    sc.talk_type = r < 0.5 ? TalkType::Double : (r < 0.75 ? TalkType::FeOnly : TalkType::NeOnly);
  } else {
    sc.talk_type = cfg.talk_type;
  }
  sc.validate();
  return sc;
}

}  // namespace

std::vector<util::ManifestEntry> synth_dataset(const DatasetConfig& cfg, const PoolPaths& pools,
                                               const fs::path& out_dir) {
  if (pools.fe.empty() || pools.ne.empty() || pools.noise.empty())
    throw std::invalid_argument("synth_dataset: fe, ne and noise pools are all required");
  fs::create_directories(out_dir);

  const int rate = 16000;
  const size_t len = size_t(cfg.duration_s * rate);
  std::vector<util::ManifestEntry> entries;

  for (int i = 0; i < cfg.num_utterances; ++i) {
    const auto sc = draw_scenario(cfg, i);
    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // far-end source and echo
    dsp::Signal x{std::vector<float>(len, 0.0f), rate};
    dsp::Signal d{std::vector<float>(len, 0.0f), rate};
    if (sc.talk_type != TalkType::NeOnly) {
      const auto& fe_path = pools.fe[size_t(rng() % pools.fe.size())];
      x.samples = fit_length(dsp::read_wav(fe_path).samples, len, rng);
      const int ir_len = std::max(64, int(sc.t60_s * rate));
      const auto ir = gen_ir(sc.t60_s, ir_len, rng(), rate);
      d = make_echo(x, ir, sc.nonlinear ? sc.distortion : Distortion{});
    }

    // near-end speech: a 3-7 s burst inside the utterance
    dsp::Signal s{std::vector<float>(len, 0.0f), rate};
    if (sc.talk_type != TalkType::FeOnly) {
      const auto& ne_path = pools.ne[size_t(rng() % pools.ne.size())];
      const size_t burst = size_t((3.0 + 4.0 * u(rng)) * rate);
      const auto piece = fit_length(dsp::read_wav(ne_path).samples, std::min(burst, len), rng);
      const size_t offset = size_t(u(rng) * double(len - piece.size()));
      std::copy(piece.begin(), piece.end(), s.samples.begin() + long(offset));
    }

    const auto& nz_path = pools.noise[size_t(rng() % pools.noise.size())];
    dsp::Signal n{fit_length(dsp::read_wav(nz_path).samples, len, rng), rate};

    const bool has_ne = sc.talk_type != TalkType::FeOnly;
    const bool has_fe = sc.talk_type != TalkType::NeOnly;
    auto bundle = mix(s, d, n, has_ne && has_fe ? std::optional(sc.ser_db) : std::nullopt,
                      std::optional(sc.snr_db));

    // the reference track is stored on the same 16-bit grid
    bundle.x.sample_rate_hz = rate;
    bundle.x.samples.resize(len);
    for (size_t j = 0; j < len; ++j)
      bundle.x.samples[j] = dsp::i16_to_float(dsp::float_to_i16(x.samples[j]));

    util::ManifestEntry e;
    e.id = "utt_" + std::to_string(i);
    e.seed = sc.seed;
    e.t60_s = sc.t60_s;
    e.ser_db = sc.ser_db;
    e.snr_db = sc.snr_db;
    e.nonlinear = sc.nonlinear;
    e.distortion_kind = to_string(sc.distortion.kind);
    e.distortion_param = sc.distortion.param;
    e.talk_type = to_string(sc.talk_type);
    e.x = e.id + "_x.wav";
    e.y = e.id + "_y.wav";
    e.s = e.id + "_s.wav";
    e.d = e.id + "_d.wav";
    e.n = e.id + "_n.wav";
    dsp::write_wav(out_dir / e.x, bundle.x);
    dsp::write_wav(out_dir / e.y, bundle.y);
    dsp::write_wav(out_dir / e.s, bundle.s);
    dsp::write_wav(out_dir / e.d, bundle.d);
    dsp::write_wav(out_dir / e.n, bundle.n);
    entries.push_back(std::move(e));
  }

  util::write_manifest(out_dir / "manifest.jsonl", entries);
  return entries;
}

}  // namespace y2aec::lem
