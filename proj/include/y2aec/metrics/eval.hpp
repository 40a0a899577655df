#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "y2aec/lem/synth.hpp"
#include "y2aec/metrics/metrics.hpp"
#include "y2aec/pipeline/y2net.hpp"

namespace y2aec::metrics {

/// White-box component decomposition. The pipeline output satisfies
/// S^ = (Y - D^) .* G per frame, so applying the stored per-frame gain to
/// the analyzed components yields s~, d~, n~ with s~ + d~ + n~ = s^ in the
/// spectral domain:
///   S~ = S.G,  D~ = (D - D^).G,  N~ = (Y - S - D).G.
/// The noise spectrum is the residual, which keeps the identity exact; the
/// arithmetic runs in double and max_additivity_err reports the largest
/// per-bin deviation from (Y - D^).G.
struct Decomposition {
  dsp::Signal s_tilde, d_tilde, n_tilde;
  double max_additivity_err = 0.0;
};

Decomposition decompose_components(const std::vector<pipeline::FrameOutput>& frames,
                                   const dsp::Signal& y, const dsp::Signal& s,
                                   const dsp::Signal& d, const dsp::FrameConfig& frame);

/// Per-utterance metric set mirroring the evaluation conditions: the full
/// mixture scored through the white-box decomposition, plus the component-
/// only conditions (y=d echo, y=n noise, y=s pass-through). Conditions
/// whose reference component is silent come back as nullopt.
struct UtteranceMetrics {
  std::optional<double> erle_wb_db;
  std::optional<double> dsnr_wb_db;
  std::optional<double> erle_direct_db;
  std::optional<double> dsnr_component_db;
  std::optional<double> s_pass_lsd_db;
  std::optional<double> s_pass_snr_db;
  double additivity_err = 0.0;
};

/// Runs the four conditions on one bundle. All references are passed
/// through the identical high-pass + analysis + synthesis chain as the
/// processed signal, so an identity processor scores exactly 0 dB.
UtteranceMetrics eval_utterance(pipeline::FrameProcessor& proc, const lem::UtteranceBundle& bundle,
                                const dsp::FrameConfig& frame);

struct DatasetReport {
  std::string method;
  UtteranceMetrics mean;  // per-metric mean over utterances where defined
  size_t utterances = 0;
  std::optional<double> rtf;
};

/// Loads bundles from a manifest (component tracks required) and averages
/// eval_utterance over them.
DatasetReport eval_dataset(pipeline::FrameProcessor& proc,
                           const std::filesystem::path& manifest_path,
                           const dsp::FrameConfig& frame, const std::string& method_name);

struct RtfOptions {
  int repetitions = 20;   // passes over the frame set
  int warmup = 10;        // discarded leading frame timings
};

/// Real-time factor: median wall-clock time of one processor step divided
/// by the frame shift duration. Single-threaded by contract.
double rtf_bench(pipeline::FrameProcessor& proc,
                 const std::vector<std::pair<dsp::Spectrum, dsp::Spectrum>>& frames,
                 const dsp::FrameConfig& frame, const RtfOptions& opt = {});

/// Table-style rendering with one row per method; PESQ-family columns are
/// present but marked unavailable. CSV and JSON exports share the schema.
std::string render_report_table(const std::vector<DatasetReport>& rows);
void write_report_csv(const std::filesystem::path& path, const std::vector<DatasetReport>& rows);
void write_report_json(const std::filesystem::path& path, const std::vector<DatasetReport>& rows);

}  // namespace y2aec::metrics
