#pragma once

#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "y2aec/tc/ops.hpp"
#include "y2aec/tc/param.hpp"

namespace y2aec::ynet {

enum class Fusion { EF, LF };

/// Architecture of one Y-Net: two spectral inputs, a four-layer conv
/// encoder (single path for EF, one path per input for LF), a ConvLSTM
/// bottleneck with F kernels, a mirrored deconv decoder with two additive
/// skip connections, and a linear conv output layer with C kernels.
struct YNetConfig {
  int M = 260;           // feature axis length
  int N = 24;            // kernel length along the feature axis
  int F = 70;            // feature maps
  int C = 2;             // output channels (re/im)
  Fusion fusion = Fusion::EF;
  float leaky_slope = 0.3f;
  bool conv_biases = true;

  void validate() const {
    if (M < 4 || M % 4 != 0) throw std::invalid_argument("YNetConfig: M must be divisible by 4");
    if (F < 1) throw std::invalid_argument("YNetConfig: F must be >= 1");
    if (C != 2) throw std::invalid_argument("YNetConfig: C must be 2");
    if (N < 1) throw std::invalid_argument("YNetConfig: N must be >= 1");
    if (!(leaky_slope > 0.0f && leaky_slope < 1.0f))
      throw std::invalid_argument("YNetConfig: leaky slope must be in (0,1)");
  }
};

template <typename S>
struct YNetStateT {
  tc::TensorT<S> h;
  tc::TensorT<S> c;
};

using YNetState = YNetStateT<float>;

/// Zero ConvLSTM state; shape M/4 x 1 x F for both fusion variants.
template <typename S>
YNetStateT<S> init_state(const YNetConfig& cfg) {
  cfg.validate();
  return {tc::TensorT<S>::zeros({cfg.M / 4, 1, cfg.F}), tc::TensorT<S>::zeros({cfg.M / 4, 1, cfg.F})};
}

/// Records layer output shapes during a forward pass.
struct ShapeProbe {
  std::vector<std::pair<std::string, tc::Shape>> entries;
};

namespace detail {

template <typename S>
void add_conv(tc::ParamSetT<S>& ps, const std::string& name, int n, int ci, int co, bool bias,
              std::mt19937& rng) {
  ps.add(name + ".w", {n, ci, co}, tc::glorot_uniform<S>({n, ci, co}, n * ci, n * co, rng));
  if (bias) ps.add(name + ".b", {co}, {});
}

template <typename S>
void add_lstm(tc::ParamSetT<S>& ps, const std::string& name, int n, int ci, int f,
              std::mt19937& rng) {
  static const char* gates[4] = {"i", "f", "o", "g"};
  for (auto* g : gates) {
    ps.add(name + ".wx_" + g, {n, ci, f}, tc::glorot_uniform<S>({n, ci, f}, n * ci, n * f, rng));
    ps.add(name + ".wh_" + g, {n, f, f}, tc::glorot_uniform<S>({n, f, f}, n * f, n * f, rng));
    ps.add(name + ".b_" + g, {f}, {});
  }
}

}  // namespace detail

/// Adds all parameters of one Y-Net under `prefix` (e.g. "aec", "pf").
template <typename S>
void add_ynet_params(tc::ParamSetT<S>& ps, const YNetConfig& cfg, const std::string& prefix,
                     std::mt19937& rng) {
  cfg.validate();
  const int n = cfg.N, f = cfg.F, c2 = 2 * cfg.C;
  const bool bias = cfg.conv_biases;
  if (cfg.fusion == Fusion::EF) {
    detail::add_conv(ps, prefix + ".enc1", n, c2, f, bias, rng);
    detail::add_conv(ps, prefix + ".enc2", n, f, f, bias, rng);
    detail::add_conv(ps, prefix + ".enc3", n, f, 2 * f, bias, rng);
    detail::add_conv(ps, prefix + ".enc4", n, 2 * f, 2 * f, bias, rng);
    detail::add_lstm(ps, prefix + ".lstm", n, 2 * f, f, rng);
  } else {
    for (const char* path : {".encu", ".encv"}) {
      detail::add_conv(ps, prefix + path + "1", n, cfg.C, f, bias, rng);
      detail::add_conv(ps, prefix + path + "2", n, f, f, bias, rng);
      detail::add_conv(ps, prefix + path + "3", n, f, 2 * f, bias, rng);
      detail::add_conv(ps, prefix + path + "4", n, 2 * f, 2 * f, bias, rng);
    }
    detail::add_lstm(ps, prefix + ".lstm", n, 4 * f, f, rng);
  }
  detail::add_conv(ps, prefix + ".dec1", n, f, 2 * f, bias, rng);
  detail::add_conv(ps, prefix + ".dec2", n, 2 * f, 2 * f, bias, rng);
  detail::add_conv(ps, prefix + ".dec3", n, 2 * f, f, bias, rng);
  detail::add_conv(ps, prefix + ".dec4", n, f, f, bias, rng);
  detail::add_conv(ps, prefix + ".out", n, f, cfg.C, bias, rng);
}

namespace detail {

template <typename S>
tc::TensorT<S> bias_or_none(const tc::BoundParams<S>& p, const std::string& name, bool enabled) {
  return enabled ? p[name] : tc::TensorT<S>();
}

template <typename S>
struct EncoderTaps {
  tc::TensorT<S> tap_f;    // after the first Conv(F), pre-stride
  tc::TensorT<S> tap_2f;   // after Conv(2F), pre-stride
  tc::TensorT<S> bottom;   // encoder output entering the bottleneck
};

template <typename S>
EncoderTaps<S> run_encoder(const tc::TensorT<S>& x, const YNetConfig& cfg,
                           const tc::BoundParams<S>& p, const std::string& pre, int in_ch,
                           ShapeProbe* probe, const std::string& probe_tag) {
  const S slope = S(cfg.leaky_slope);
  const bool bias = cfg.conv_biases;
  const int n = cfg.N, f = cfg.F;

  auto layer = [&](const tc::TensorT<S>& in, const std::string& name, int ci, int co, int stride) {
    const tc::ConvSpec spec{n, ci, co, stride, false};
    auto out = tc::leaky_relu(tc::conv1d_feature(in, spec, p[name + ".w"], bias_or_none(p, name + ".b", bias)), slope);
    if (probe) probe->entries.push_back({probe_tag + name.substr(name.rfind('.') + 1), out.shape()});
    return out;
  };

  EncoderTaps<S> taps;
  taps.tap_f = layer(x, pre + "1", in_ch, f, 1);
  auto e2 = layer(taps.tap_f, pre + "2", f, f, 2);
  taps.tap_2f = layer(e2, pre + "3", f, 2 * f, 1);
  taps.bottom = layer(taps.tap_2f, pre + "4", 2 * f, 2 * f, 2);
  return taps;
}

}  // namespace detail

/// One frame through the Y-Net. U and V are packed spectra (M,1,C); the
/// ConvLSTM state is advanced in place. Output is linear, shape (M,1,C).
template <typename S>
tc::TensorT<S> ynet_forward(const tc::TensorT<S>& u, const tc::TensorT<S>& v,
                            YNetStateT<S>& state, const YNetConfig& cfg,
                            const tc::BoundParams<S>& p, const std::string& prefix,
                            ShapeProbe* probe = nullptr) {
  cfg.validate();
  const tc::Shape want{cfg.M, 1, cfg.C};
  if (u.shape() != want || v.shape() != want)
    throw std::invalid_argument("ynet_forward: inputs must be (M,1,C)");

  const S slope = S(cfg.leaky_slope);
  const bool bias = cfg.conv_biases;
  const int n = cfg.N, f = cfg.F;

  detail::EncoderTaps<S> taps;
  tc::TensorT<S> bottleneck_in;
  int lstm_in_ch = 0;
  if (cfg.fusion == Fusion::EF) {
    auto x0 = tc::concat_channels(u, v);
    if (probe) probe->entries.push_back({"input", x0.shape()});
    taps = detail::run_encoder(x0, cfg, p, prefix + ".enc", 2 * cfg.C, probe, "");
    bottleneck_in = taps.bottom;
    lstm_in_ch = 2 * f;
  } else {
    auto taps_u = detail::run_encoder(u, cfg, p, prefix + ".encu", cfg.C, probe, "u.");
    taps = detail::run_encoder(v, cfg, p, prefix + ".encv", cfg.C, probe, "v.");
    bottleneck_in = tc::concat_channels(taps_u.bottom, taps.bottom);
    if (probe) probe->entries.push_back({"fused", bottleneck_in.shape()});
    lstm_in_ch = 4 * f;
  }

  tc::ConvLstmWeightsT<S> lw;
  lw.kernel_len = n;
  lw.in_channels = lstm_in_ch;
  lw.hidden_channels = f;
  static const char* gates[4] = {"i", "f", "o", "g"};
  for (int g = 0; g < 4; ++g) {
    lw.wx[g] = p[prefix + ".lstm.wx_" + gates[g]];
    lw.wh[g] = p[prefix + ".lstm.wh_" + gates[g]];
    lw.b[g] = p[prefix + ".lstm.b_" + gates[g]];
  }
  auto lstm = tc::convlstm_step(bottleneck_in, state.h, state.c, lw);
  state.h = lstm.h;
  state.c = lstm.c;
  if (probe) probe->entries.push_back({"lstm", lstm.h.shape()});

  auto deconv_layer = [&](const tc::TensorT<S>& in, const std::string& name, int ci, int co,
                          int stride) {
    const tc::ConvSpec spec{n, ci, co, stride, true};
    auto out = tc::leaky_relu(
        tc::deconv1d_feature(in, spec, p[name + ".w"], detail::bias_or_none(p, name + ".b", bias)),
        slope);
    if (probe) probe->entries.push_back({name.substr(name.rfind('.') + 1), out.shape()});
    return out;
  };

  auto d1 = tc::add(deconv_layer(lstm.h, prefix + ".dec1", f, 2 * f, 2), taps.tap_2f);
  auto d2 = deconv_layer(d1, prefix + ".dec2", 2 * f, 2 * f, 1);
  auto d3 = tc::add(deconv_layer(d2, prefix + ".dec3", 2 * f, f, 2), taps.tap_f);
  auto d4 = deconv_layer(d3, prefix + ".dec4", f, f, 1);

  const tc::ConvSpec out_spec{n, f, cfg.C, 1, false};
  auto w = tc::conv1d_feature(d4, out_spec, p[prefix + ".out.w"],
                              detail::bias_or_none(p, prefix + ".out.b", bias));
  if (probe) probe->entries.push_back({"out", w.shape()});
  return w;
}

/// Unrolls ynet_forward over equal-length input sequences from zero state;
/// the result stays differentiable across all frames.
template <typename S>
std::vector<tc::TensorT<S>> ynet_forward_sequence(std::span<const tc::TensorT<S>> u_seq,
                                                  std::span<const tc::TensorT<S>> v_seq,
                                                  const YNetConfig& cfg,
                                                  const tc::BoundParams<S>& p,
                                                  const std::string& prefix) {
  if (u_seq.size() != v_seq.size())
    throw std::invalid_argument("ynet_forward_sequence: length mismatch");
  auto state = init_state<S>(cfg);
  std::vector<tc::TensorT<S>> out;
  out.reserve(u_seq.size());
  for (size_t i = 0; i < u_seq.size(); ++i)
    out.push_back(ynet_forward(u_seq[i], v_seq[i], state, cfg, p, prefix));
  return out;
}

}  // namespace y2aec::ynet
