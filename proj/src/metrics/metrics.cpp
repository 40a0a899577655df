#include "y2aec/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "y2aec/dsp/stft.hpp"

namespace y2aec::metrics {

namespace {

std::vector<double> smoothed_power(const std::vector<float>& x, double beta) {
  std::vector<double> p(x.size());
  double state = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    state = beta * state + (1.0 - beta) * double(x[i]) * x[i];
    p[i] = state;
  }
  return p;
}

double energy(const dsp::Signal& s) {
  double acc = 0.0;
  for (float v : s.samples) acc += double(v) * v;
  return acc;
}

}  // namespace

double erle_db(const dsp::Signal& d, const dsp::Signal& d_tilde, const ErleOptions& opt) {
  if (d.samples.size() != d_tilde.samples.size())
    throw std::invalid_argument("erle: length mismatch");
  if (d.samples.empty()) throw std::invalid_argument("erle: empty signals");

  const auto p_d = smoothed_power(d.samples, opt.smoothing);
  const auto p_r = smoothed_power(d_tilde.samples, opt.smoothing);

  const double peak = *std::max_element(p_d.begin(), p_d.end());
  if (peak <= 0.0) throw std::invalid_argument("erle: echo track has zero energy");
  const double active = peak * std::pow(10.0, opt.active_floor_db / 10.0);
  const double cap_ratio = std::pow(10.0, -opt.cap_db / 10.0);

  double acc = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < p_d.size(); ++i) {
    if (p_d[i] <= active) continue;
    const double denom = std::max(p_r[i], p_d[i] * cap_ratio);  // caps at +cap_db
    acc += 10.0 * std::log10(p_d[i] / denom);
    ++count;
  }
  return acc / double(count);
}

double delta_snr_db(const dsp::Signal& s, const dsp::Signal& n, const dsp::Signal& s_tilde,
                    const dsp::Signal& n_tilde, double cap_db) {
  const double es = energy(s), en = energy(n);
  if (es <= 0.0 || en <= 0.0) throw std::invalid_argument("delta_snr: zero reference energy");
  // processed components may vanish entirely; clamp instead of diverging
  const double floor = std::pow(10.0, -cap_db / 10.0);
  const double ets = std::max(energy(s_tilde), es * floor);
  const double etn = std::max(energy(n_tilde), en * floor);
  // single log of the ratio product: identical components give exactly 0
  return 10.0 * std::log10((ets * en) / (etn * es));
}

double delta_snr_component_db(const dsp::Signal& n, const dsp::Signal& n_tilde, double cap_db) {
  const double en = energy(n);
  if (en <= 0.0) throw std::invalid_argument("delta_snr: zero reference energy");
  const double etn = std::max(energy(n_tilde), en * std::pow(10.0, -cap_db / 10.0));
  return 10.0 * std::log10(en / etn);
}

double log_spectral_distance_db(const dsp::Signal& ref, const dsp::Signal& test,
                                const dsp::FrameConfig& frame) {
  const auto a = dsp::analyze(ref, frame);
  const auto b = dsp::analyze(test, frame);
  const size_t frames = std::min(a.num_frames(), b.num_frames());
  if (frames == 0) throw std::invalid_argument("lsd: too short");
  constexpr double eps = 1e-10;

  double acc = 0.0;
  for (size_t l = 0; l < frames; ++l) {
    double frame_acc = 0.0;
    for (size_t k = 0; k < a.frames[l].size(); ++k) {
      const double pa = std::norm(std::complex<double>(a.frames[l][k])) + eps;
      const double pb = std::norm(std::complex<double>(b.frames[l][k])) + eps;
      const double db = 10.0 * std::log10(pa / pb);
      frame_acc += db * db;
    }
    acc += std::sqrt(frame_acc / double(a.frames[l].size()));
  }
  return acc / double(frames);
}

double snr_db(const dsp::Signal& ref, const dsp::Signal& test, double cap_db) {
  if (ref.samples.size() != test.samples.size()) throw std::invalid_argument("snr: length mismatch");
  const double es = energy(ref);
  if (es <= 0.0) throw std::invalid_argument("snr: zero reference energy");
  double err = 0.0;
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    const double d = double(test.samples[i]) - ref.samples[i];
    err += d * d;
  }
  const double floor = es * std::pow(10.0, -cap_db / 10.0);
  return 10.0 * std::log10(es / std::max(err, floor));
}

}  // namespace y2aec::metrics
