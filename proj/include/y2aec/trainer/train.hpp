#pragma once

#include <functional>
#include <random>
#include <vector>

#include "y2aec/pipeline/y2net.hpp"
#include "y2aec/trainer/loss.hpp"
#include "y2aec/trainer/schedule.hpp"
#include "y2aec/util/manifest.hpp"

namespace y2aec::trainer {

enum class Phase { PretrainAec, Joint, SingleStage };

struct TrainConfig {
  int batch_size = 16;
  int bptt_len = 50;
  double lr0 = 5e-3;
  double lr_decay = 0.6;
  double lr_floor = 5e-4;
  int patience_decay = 3;
  int patience_stop = 10;
  int max_epochs = 100;
  double alpha = 0.25;
  Phase phase = Phase::PretrainAec;
  int threads = 1;
  uint64_t seed = 1;

  void validate() const;
};

/// One utterance analyzed into aligned half-spectrum sequences. All four
/// tracks go through the same high-pass and framing, so targets live in
/// the same domain the networks observe.
struct TrainUtterance {
  std::vector<dsp::Spectrum> x, y, d, s;
};

/// Loads wav tracks referenced by manifest entries, applies the high-pass
/// and analysis front-end. Component tracks are required.
std::vector<TrainUtterance> load_training_data(const std::filesystem::path& manifest_path,
                                               const dsp::FrameConfig& frame);

/// Contiguous non-overlapping BPTT window into an analyzed utterance.
struct Window {
  const TrainUtterance* utt = nullptr;
  size_t begin = 0;
};

/// All complete windows of bptt_len frames, utterance by utterance;
/// trailing partial windows are dropped.
std::vector<Window> make_windows(const std::vector<TrainUtterance>& data, int bptt_len);

/// Deterministic shuffled batches of window indices for one epoch.
std::vector<std::vector<size_t>> make_batches(size_t n_windows, int batch_size, uint64_t seed);

struct WindowLoss {
  double j = 0.0;
  double j_aec = 0.0;
  double j_pf = 0.0;
  std::vector<std::vector<float>> grads;  // parameter-set order; empty unless requested
};

/// Forward (and optionally backward) over one BPTT window from zero state.
WindowLoss eval_window(const pipeline::Y2NetConfig& model, Phase phase, double alpha,
                       const tc::ParamSet& params, const Window& window, int bptt_len,
                       bool with_grads);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_j = 0.0;
  double train_j_aec = 0.0;
  double train_j_pf = 0.0;
  double val_j = 0.0;
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochStats> history;
  tc::ParamSet best_params;
  double best_val = 0.0;
  int best_epoch = -1;
  std::string stop_reason;
};

/// Fresh parameters for the given phase: pretraining builds only the AEC
/// net, the joint phase both nets, single-stage its one net.
tc::ParamSet build_phase_params(const pipeline::Y2NetConfig& model, Phase phase, uint64_t seed);

/// Copies pretrained "aec.*" parameters into a joint-phase set.
void adopt_aec_weights(tc::ParamSet& joint_params, const tc::ParamSet& pretrained);

/// Two-step protocol driver for one phase: epoch loop with Adam, the
/// plateau schedule, early stopping and best-checkpoint retention.
TrainResult train(const TrainConfig& cfg, const pipeline::Y2NetConfig& model,
                  tc::ParamSet params, const std::vector<TrainUtterance>& train_data,
                  const std::vector<TrainUtterance>& val_data,
                  const std::function<void(const EpochStats&)>& on_epoch = nullptr);

}  // namespace y2aec::trainer
