#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "y2aec/dsp/features.hpp"
#include "y2aec/dsp/stft.hpp"
#include "y2aec/pipeline/mask.hpp"
#include "y2aec/ynet/ynet.hpp"

namespace y2aec::pipeline {

enum class PfInput { Dhat, X };
enum class Mode { TwoStage, SingleStage };

/// Full system configuration. In two-stage mode the AEC net maps (X, Y) to
/// an echo estimate that is subtracted from Y, and the postfilter net maps
/// (E, D-hat or X) to a complex mask applied to E. In single-stage mode one
/// net maps (X, Y) directly to a mask applied to Y.
struct Y2NetConfig {
  Mode mode = Mode::TwoStage;
  ynet::YNetConfig aec;  // the only net in single-stage mode
  ynet::YNetConfig pf;
  PfInput pf_input = PfInput::Dhat;
  dsp::FrameConfig frame;

  void validate() const;
};

std::string to_json(const Y2NetConfig& cfg);
Y2NetConfig y2net_config_from_json(const std::string& json);

/// Everything the system produces for one frame. The output satisfies
/// shat = (Y - dhat) .* gain bin by bin (= Y .* gain in single-stage mode,
/// where dhat is zero).
struct FrameOutput {
  dsp::Spectrum shat;
  dsp::Spectrum dhat;
  dsp::Spectrum e;
  dsp::Spectrum mask;
  dsp::Spectrum gain;  // compressed complex gain, tanh(|M|) * M/|M|
};

/// Streaming frame interface shared by the real pipeline and evaluation
/// stubs. One instance per stream; not shareable across threads.
class FrameProcessor {
 public:
  virtual ~FrameProcessor() = default;
  virtual void reset() = 0;
  virtual FrameOutput step(const dsp::Spectrum& x, const dsp::Spectrum& y) = 0;
};

/// Inference-time pipeline over a bound (read-only) parameter set.
class Y2NetRuntime : public FrameProcessor {
 public:
  Y2NetRuntime(const Y2NetConfig& cfg, const tc::ParamSet& params);

  void reset() override;
  FrameOutput step(const dsp::Spectrum& x, const dsp::Spectrum& y) override;

  const Y2NetConfig& config() const { return cfg_; }

 private:
  Y2NetConfig cfg_;
  tc::BoundParams<float> params_;
  ynet::YNetState aec_state_;
  ynet::YNetState pf_state_;
};

/// Fresh Glorot-initialized parameters for the configured model.
tc::ParamSet build_params(const Y2NetConfig& cfg, uint64_t seed);

struct UtteranceResult {
  dsp::Signal shat;
  std::vector<FrameOutput> frames;  // populated when keep_frames is set
};

/// End-to-end: high-pass both inputs, analyze, run the frame loop from
/// zero state, overlap-add the enhanced spectra.
UtteranceResult process_utterance(const dsp::Signal& x, const dsp::Signal& y,
                                  const Y2NetConfig& cfg, const tc::ParamSet& params,
                                  bool keep_frames = false);

}  // namespace y2aec::pipeline
