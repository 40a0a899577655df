#include "y2aec/trainer/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "y2aec/dsp/wav.hpp"

namespace y2aec::trainer {

void TrainConfig::validate() const {
  if (batch_size < 1 || bptt_len < 1) throw std::invalid_argument("TrainConfig: bad batch geometry");
  if (lr0 <= 0 || lr_decay <= 0 || lr_decay >= 1 || lr_floor <= 0)
    throw std::invalid_argument("TrainConfig: bad learning-rate constants");
  if (patience_decay < 1 || patience_stop < 1 || max_epochs < 1)
    throw std::invalid_argument("TrainConfig: bad stopping constants");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("TrainConfig: alpha outside [0,1]");
  if (threads < 0) throw std::invalid_argument("TrainConfig: bad thread count");
}

std::vector<TrainUtterance> load_training_data(const std::filesystem::path& manifest_path,
                                               const dsp::FrameConfig& frame) {
  const auto entries = util::read_manifest(manifest_path);
  if (entries.empty()) throw std::runtime_error("load_training_data: empty manifest");
  const auto dir = manifest_path.parent_path();

  std::vector<TrainUtterance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!e.has_components())
      throw std::runtime_error("load_training_data: entry " + e.id + " lacks component tracks");
    auto analyze_track = [&](const std::string& track) {
      const auto sig = dsp::read_wav(util::resolve_track(dir, track));
      if (sig.sample_rate_hz != frame.sample_rate_hz)
        throw std::runtime_error("load_training_data: wrong sample rate in " + track);
      return dsp::analyze(dsp::highpass(sig), frame).frames;
    };
    TrainUtterance u;
    u.x = analyze_track(e.x);
    u.y = analyze_track(e.y);
    u.d = analyze_track(e.d);
    u.s = analyze_track(e.s);
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Window> make_windows(const std::vector<TrainUtterance>& data, int bptt_len) {
  std::vector<Window> windows;
  for (const auto& u : data) {
    const size_t frames = u.y.size();
    for (size_t begin = 0; begin + size_t(bptt_len) <= frames; begin += size_t(bptt_len))
      windows.push_back({&u, begin});
  }
  return windows;
}

std::vector<std::vector<size_t>> make_batches(size_t n_windows, int batch_size, uint64_t seed) {
  std::vector<size_t> order(n_windows);
  for (size_t i = 0; i < n_windows; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<size_t>> batches;
  for (size_t at = 0; at < n_windows; at += size_t(batch_size)) {
    const size_t end = std::min(n_windows, at + size_t(batch_size));
    batches.emplace_back(order.begin() + long(at), order.begin() + long(end));
  }
  return batches;
}

WindowLoss eval_window(const pipeline::Y2NetConfig& model, Phase phase, double alpha,
                       const tc::ParamSet& params, const Window& window, int bptt_len,
                       bool with_grads) {
  const int m = model.frame.feature_dim;
  const int bins = model.frame.n_bins;
  const auto weights = make_loss_weights<float>(m, bins, model.frame.dft_size);
  const auto projection = make_bin_projection<float>(m, bins);

  auto bound = tc::BoundParams<float>::bind(params, with_grads);
  auto aec_state = ynet::init_state<float>(model.aec);
  auto pf_state = phase == Phase::Joint ? ynet::init_state<float>(model.pf)
                                        : ynet::YNetStateT<float>{};

  tc::Tensor sum_aec, sum_pf;
  auto accumulate = [](tc::Tensor& acc, const tc::Tensor& term) {
    acc = acc.defined() ? tc::add(acc, term) : term;
  };

  for (int f = 0; f < bptt_len; ++f) {
    const size_t l = window.begin + size_t(f);
    const auto xt = dsp::pack_features<float>(window.utt->x[l], m);
    const auto yt = dsp::pack_features<float>(window.utt->y[l], m);

    switch (phase) {
      case Phase::PretrainAec: {
        const auto dhat = ynet::ynet_forward(xt, yt, aec_state, model.aec, bound, "aec");
        const auto target = dsp::pack_features<float>(window.utt->d[l], m);
        accumulate(sum_aec, spectral_mse_tensor(dhat, target, weights));
        break;
      }
      case Phase::Joint: {
        const auto dhat = ynet::ynet_forward(xt, yt, aec_state, model.aec, bound, "aec");
        const auto d_target = dsp::pack_features<float>(window.utt->d[l], m);
        accumulate(sum_aec, spectral_mse_tensor(dhat, d_target, weights));

        const auto dhat_proj = tc::mul_const(dhat, projection);
        const auto e = tc::mul_const(tc::sub(yt, dhat), projection);
        const auto second = model.pf_input == pipeline::PfInput::Dhat ? dhat_proj : xt;
        const auto mask = tc::mul_const(ynet::ynet_forward(e, second, pf_state, model.pf, bound, "pf"),
                                        projection);
        const auto shat = pipeline::mask_compress(e, mask);
        const auto s_target = dsp::pack_features<float>(window.utt->s[l], m);
        accumulate(sum_pf, spectral_mse_tensor(shat, s_target, weights));
        break;
      }
      case Phase::SingleStage: {
        const auto mask = tc::mul_const(ynet::ynet_forward(xt, yt, aec_state, model.aec, bound, "net"),
                                        projection);
        const auto shat = pipeline::mask_compress(yt, mask);
        const auto s_target = dsp::pack_features<float>(window.utt->s[l], m);
        accumulate(sum_pf, spectral_mse_tensor(shat, s_target, weights));
        break;
      }
    }
  }

  const float inv_frames = 1.0f / float(bptt_len);
  WindowLoss out;
  tc::Tensor total;
  switch (phase) {
    case Phase::PretrainAec:
      total = tc::scale(sum_aec, inv_frames);
      out.j_aec = double(total.at(0));
      out.j = out.j_aec;
      break;
    case Phase::Joint: {
      const auto j_aec = tc::scale(sum_aec, inv_frames);
      const auto j_pf = tc::scale(sum_pf, inv_frames);
      total = tc::add(tc::scale(j_aec, float(alpha)), tc::scale(j_pf, float(1.0 - alpha)));
      out.j_aec = double(j_aec.at(0));
      out.j_pf = double(j_pf.at(0));
      out.j = double(total.at(0));
      break;
    }
    case Phase::SingleStage:
      total = tc::scale(sum_pf, inv_frames);
      out.j_pf = double(total.at(0));
      out.j = out.j_pf;
      break;
  }

  if (!std::isfinite(out.j))
    throw std::runtime_error("eval_window: non-finite loss (training diverged)");
  if (with_grads) {
    tc::backward(total);
    out.grads = bound.grads();
  }
  return out;
}

tc::ParamSet build_phase_params(const pipeline::Y2NetConfig& model, Phase phase, uint64_t seed) {
  model.validate();
  std::mt19937 rng(uint32_t(seed ^ (seed >> 32)));
  tc::ParamSet ps;
  switch (phase) {
    case Phase::PretrainAec:
      ynet::add_ynet_params(ps, model.aec, "aec", rng);
      break;
    case Phase::Joint:
      ynet::add_ynet_params(ps, model.aec, "aec", rng);
      ynet::add_ynet_params(ps, model.pf, "pf", rng);
      break;
    case Phase::SingleStage:
      ynet::add_ynet_params(ps, model.aec, "net", rng);
      break;
  }
  return ps;
}

void adopt_aec_weights(tc::ParamSet& joint_params, const tc::ParamSet& pretrained) {
  size_t adopted = 0;
  for (const auto& p : pretrained.items()) {
    if (p.name.rfind("aec.", 0) != 0) continue;
    if (!joint_params.contains(p.name))
      throw std::invalid_argument("adopt_aec_weights: unexpected parameter " + p.name);
    auto& dst = joint_params.at(p.name);
    if (dst.shape != p.shape)
      throw std::invalid_argument("adopt_aec_weights: shape mismatch for " + p.name);
    dst.value = p.value;
    ++adopted;
  }
  if (adopted == 0) throw std::invalid_argument("adopt_aec_weights: no aec parameters found");
}

namespace {

struct BatchStats {
  double j = 0.0, j_aec = 0.0, j_pf = 0.0;
};

/// Evaluates a batch of windows, possibly on several threads, and reduces
/// gradients in window order so results do not depend on the thread count.
BatchStats run_batch(const pipeline::Y2NetConfig& model, const TrainConfig& cfg,
                     const tc::ParamSet& params, const std::vector<Window>& windows,
                     const std::vector<size_t>& batch, std::vector<std::vector<float>>* grad_out) {
  std::vector<WindowLoss> results(batch.size());
  const int threads = std::max(1, cfg.threads == 0 ? int(std::thread::hardware_concurrency())
                                                   : cfg.threads);
  const bool with_grads = grad_out != nullptr;

  if (threads == 1 || batch.size() == 1) {
    for (size_t i = 0; i < batch.size(); ++i)
      results[i] = eval_window(model, cfg.phase, cfg.alpha, params, windows[batch[i]], cfg.bptt_len,
                               with_grads);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= batch.size() || failed.load()) return;
          try {
            results[i] = eval_window(model, cfg.phase, cfg.alpha, params, windows[batch[i]],
                                     cfg.bptt_len, with_grads);
          } catch (...) {
            failed.store(true);
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error("run_batch: worker failed (non-finite loss?)");
  }

  BatchStats stats;
  const double inv = 1.0 / double(batch.size());
  for (const auto& r : results) {
    stats.j += r.j * inv;
    stats.j_aec += r.j_aec * inv;
    stats.j_pf += r.j_pf * inv;
  }

  if (with_grads) {
    grad_out->clear();
    for (const auto& p : params.items())
      grad_out->emplace_back(p.value.size(), 0.0f);
    for (const auto& r : results)  // window order: deterministic reduction
      for (size_t pi = 0; pi < grad_out->size(); ++pi) {
        auto& dst = (*grad_out)[pi];
        const auto& src = r.grads[pi];
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += float(inv) * src[i];
      }
  }
  return stats;
}

double validate_pass(const pipeline::Y2NetConfig& model, const TrainConfig& cfg,
                     const tc::ParamSet& params, const std::vector<Window>& windows) {
  if (windows.empty()) throw std::runtime_error("train: validation set has no complete windows");
  std::vector<size_t> all(windows.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  return run_batch(model, cfg, params, windows, all, nullptr).j;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const pipeline::Y2NetConfig& model, tc::ParamSet params,
                  const std::vector<TrainUtterance>& train_data,
                  const std::vector<TrainUtterance>& val_data,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  model.validate();

  const auto train_windows = make_windows(train_data, cfg.bptt_len);
  const auto val_windows = make_windows(val_data, cfg.bptt_len);
  if (train_windows.empty())
    throw std::runtime_error("train: no utterance is long enough for one BPTT window");

  LrSchedule schedule(cfg.lr0, cfg.lr_decay, cfg.patience_decay, cfg.lr_floor);
  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = schedule.lr();

    const auto batches = make_batches(train_windows.size(), cfg.batch_size,
                                      cfg.seed * 1000003ull + uint64_t(epoch));
    double sum_j = 0.0, sum_aec = 0.0, sum_pf = 0.0;
    std::vector<std::vector<float>> grads;
    for (const auto& batch : batches) {
      const auto bs = run_batch(model, cfg, params, train_windows, batch, &grads);
      sum_j += bs.j;
      sum_aec += bs.j_aec;
      sum_pf += bs.j_pf;
      tc::adam_update<float>(params, grads, float(schedule.lr()));
    }
    stats.train_j = sum_j / double(batches.size());
    stats.train_j_aec = sum_aec / double(batches.size());
    stats.train_j_pf = sum_pf / double(batches.size());

    stats.val_j = validate_pass(model, cfg, params, val_windows);
    stats.improved = stats.val_j < result.best_val;
    if (stats.improved) {
      result.best_val = stats.val_j;
      result.best_epoch = epoch;
      result.best_params = params;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
    }

    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (epochs_since_improve >= cfg.patience_stop) {
      result.stop_reason = "no improvement for " + std::to_string(cfg.patience_stop) + " epochs";
      break;
    }
    if (!schedule.on_epoch(stats.improved)) {
      result.stop_reason = "learning rate below floor";
      break;
    }
    if (epoch == cfg.max_epochs) result.stop_reason = "max epochs";
  }

  if (result.best_epoch < 0) {
    result.best_params = std::move(params);
    result.stop_reason = "no completed epochs";
  }
  return result;
}

}  // namespace y2aec::trainer
