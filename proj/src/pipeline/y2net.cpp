#include "y2aec/pipeline/y2net.hpp"

#include <json.hpp>
#include <random>
#include <stdexcept>

namespace y2aec::pipeline {

using nlohmann::json;

void Y2NetConfig::validate() const {
  frame.validate();
  aec.validate();
  if (aec.M != frame.feature_dim)
    throw std::invalid_argument("Y2NetConfig: net feature dim must match frame feature dim");
  if (mode == Mode::TwoStage) {
    pf.validate();
    if (pf.M != aec.M) throw std::invalid_argument("Y2NetConfig: stages must share M");
  }
}

namespace {

json ynet_to_json(const ynet::YNetConfig& c) {
  return json{{"M", c.M},
              {"N", c.N},
              {"F", c.F},
              {"C", c.C},
              {"fusion", c.fusion == ynet::Fusion::EF ? "ef" : "lf"},
              {"leaky_slope", c.leaky_slope},
              {"conv_biases", c.conv_biases}};
}

ynet::YNetConfig ynet_from_json(const json& j) {
  ynet::YNetConfig c;
  c.M = j.at("M").get<int>();
  c.N = j.at("N").get<int>();
  c.F = j.at("F").get<int>();
  c.C = j.at("C").get<int>();
  const std::string fusion = j.at("fusion").get<std::string>();
  if (fusion == "ef")
    c.fusion = ynet::Fusion::EF;
  else if (fusion == "lf")
    c.fusion = ynet::Fusion::LF;
  else
    throw std::invalid_argument("config: unknown fusion " + fusion);
  c.leaky_slope = j.at("leaky_slope").get<float>();
  c.conv_biases = j.at("conv_biases").get<bool>();
  return c;
}

json frame_to_json(const dsp::FrameConfig& f) {
  return json{{"sample_rate_hz", f.sample_rate_hz}, {"frame_len", f.frame_len},
              {"frame_shift", f.frame_shift},       {"dft_size", f.dft_size},
              {"n_bins", f.n_bins},                 {"feature_dim", f.feature_dim}};
}

dsp::FrameConfig frame_from_json(const json& j) {
  dsp::FrameConfig f;
  f.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  f.frame_len = j.at("frame_len").get<int>();
  f.frame_shift = j.at("frame_shift").get<int>();
  f.dft_size = j.at("dft_size").get<int>();
  f.n_bins = j.at("n_bins").get<int>();
  f.feature_dim = j.at("feature_dim").get<int>();
  return f;
}

}  // namespace

std::string to_json(const Y2NetConfig& cfg) {
  json j;
  j["mode"] = cfg.mode == Mode::TwoStage ? "two_stage" : "single_stage";
  j["aec"] = ynet_to_json(cfg.aec);
  if (cfg.mode == Mode::TwoStage) {
    j["pf"] = ynet_to_json(cfg.pf);
    j["pf_input"] = cfg.pf_input == PfInput::Dhat ? "dhat" : "x";
  }
  j["frame"] = frame_to_json(cfg.frame);
  return j.dump();
}

Y2NetConfig y2net_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  Y2NetConfig cfg;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "two_stage")
    cfg.mode = Mode::TwoStage;
  else if (mode == "single_stage")
    cfg.mode = Mode::SingleStage;
  else
    throw std::invalid_argument("config: unknown mode " + mode);
  cfg.aec = ynet_from_json(j.at("aec"));
  if (cfg.mode == Mode::TwoStage) {
    cfg.pf = ynet_from_json(j.at("pf"));
    const std::string pf_input = j.at("pf_input").get<std::string>();
    if (pf_input == "dhat")
      cfg.pf_input = PfInput::Dhat;
    else if (pf_input == "x")
      cfg.pf_input = PfInput::X;
    else
      throw std::invalid_argument("config: unknown pf_input " + pf_input);
  }
  cfg.frame = frame_from_json(j.at("frame"));
  cfg.validate();
  return cfg;
}

tc::ParamSet build_params(const Y2NetConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937 rng(uint32_t(seed ^ (seed >> 32)));
  tc::ParamSet ps;
  if (cfg.mode == Mode::TwoStage) {
    ynet::add_ynet_params(ps, cfg.aec, "aec", rng);
    ynet::add_ynet_params(ps, cfg.pf, "pf", rng);
  } else {
    ynet::add_ynet_params(ps, cfg.aec, "net", rng);
  }
  return ps;
}

Y2NetRuntime::Y2NetRuntime(const Y2NetConfig& cfg, const tc::ParamSet& params)
    : cfg_(cfg), params_(tc::BoundParams<float>::bind(params, /*track=*/false)) {
  cfg_.validate();
  if (cfg_.mode == Mode::TwoStage) {
    if (!params.contains("aec.out.w") || !params.contains("pf.out.w"))
      throw std::invalid_argument("Y2NetRuntime: parameter set lacks aec/pf stages "
                                  "(pretraining checkpoint?)");
  } else if (!params.contains("net.out.w")) {
    throw std::invalid_argument("Y2NetRuntime: parameter set lacks the single-stage net");
  }
  reset();
}

void Y2NetRuntime::reset() {
  aec_state_ = ynet::init_state<float>(cfg_.aec);
  if (cfg_.mode == Mode::TwoStage) pf_state_ = ynet::init_state<float>(cfg_.pf);
}

FrameOutput Y2NetRuntime::step(const dsp::Spectrum& x, const dsp::Spectrum& y) {
  const int bins = cfg_.frame.n_bins;
  if (int(x.size()) != bins || int(y.size()) != bins)
    throw std::invalid_argument("Y2NetRuntime: wrong bin count");
  const int m = cfg_.frame.feature_dim;

  FrameOutput out;
  if (cfg_.mode == Mode::SingleStage) {
    const auto xt = dsp::pack_features<float>(x, m);
    const auto yt = dsp::pack_features<float>(y, m);
    const auto mask_t = ynet::ynet_forward(xt, yt, aec_state_, cfg_.aec, params_, "net");
    out.mask = dsp::unpack_features(mask_t, bins);
    out.dhat.assign(size_t(bins), {0.0f, 0.0f});
    out.e = y;
  } else {
    const auto xt = dsp::pack_features<float>(x, m);
    const auto yt = dsp::pack_features<float>(y, m);
    const auto dhat_t = ynet::ynet_forward(xt, yt, aec_state_, cfg_.aec, params_, "aec");
    out.dhat = dsp::unpack_features(dhat_t, bins);

    out.e.resize(size_t(bins));
    for (int k = 0; k < bins; ++k) out.e[size_t(k)] = y[size_t(k)] - out.dhat[size_t(k)];

    const auto et = dsp::pack_features<float>(out.e, m);
    const auto second = cfg_.pf_input == PfInput::Dhat
                            ? dsp::pack_features<float>(out.dhat, m)
                            : dsp::pack_features<float>(x, m);
    const auto mask_t = ynet::ynet_forward(et, second, pf_state_, cfg_.pf, params_, "pf");
    out.mask = dsp::unpack_features(mask_t, bins);
  }

  out.gain.resize(size_t(bins));
  out.shat.resize(size_t(bins));
  for (int k = 0; k < bins; ++k) {
    out.gain[size_t(k)] = compressed_gain(out.mask[size_t(k)]);
    out.shat[size_t(k)] = out.e[size_t(k)] * out.gain[size_t(k)];
  }
  return out;
}

UtteranceResult process_utterance(const dsp::Signal& x, const dsp::Signal& y,
                                  const Y2NetConfig& cfg, const tc::ParamSet& params,
                                  bool keep_frames) {
  if (x.samples.size() != y.samples.size())
    throw std::invalid_argument("process_utterance: length mismatch");
  if (x.sample_rate_hz != cfg.frame.sample_rate_hz || y.sample_rate_hz != cfg.frame.sample_rate_hz)
    throw std::invalid_argument("process_utterance: sample rate mismatch");

  const auto x_hp = dsp::highpass(x);
  const auto y_hp = dsp::highpass(y);
  const auto xs = dsp::analyze(x_hp, cfg.frame);
  const auto ys = dsp::analyze(y_hp, cfg.frame);

  Y2NetRuntime runtime(cfg, params);
  dsp::SpectrumSeq shat;
  shat.config = cfg.frame;
  shat.frames.reserve(xs.frames.size());

  UtteranceResult result;
  for (size_t l = 0; l < xs.frames.size(); ++l) {
    auto frame = runtime.step(xs.frames[l], ys.frames[l]);
    shat.frames.push_back(frame.shat);
    if (keep_frames) result.frames.push_back(std::move(frame));
  }
  result.shat = dsp::synthesize(shat);
  return result;
}

}  // namespace y2aec::pipeline
