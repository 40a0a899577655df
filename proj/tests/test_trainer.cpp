#include <doctest.h>

#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "y2aec/lem/synth.hpp"
#include "y2aec/trainer/train.hpp"

using namespace y2aec;
namespace fs = std::filesystem;

namespace {

dsp::Spectrum random_spectrum(uint32_t seed, float amp = 1.0f) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-amp, amp);
  dsp::Spectrum s(257);
  for (auto& b : s) b = {d(rng), d(rng)};
  s.front().imag(0.0f);
  s.back().imag(0.0f);
  return s;
}

/// Brute-force loss over all 512 bins via explicit conjugate extension.
double brute_force_mse(const dsp::Spectrum& pred, const dsp::Spectrum& target) {
  auto extend = [](const dsp::Spectrum& half) {
    std::vector<std::complex<double>> full(512);
    for (size_t k = 0; k < 257; ++k) full[k] = std::complex<double>(half[k]);
    for (size_t k = 257; k < 512; ++k) full[k] = std::conj(std::complex<double>(half[512 - k]));
    return full;
  };
  const auto p = extend(pred);
  const auto t = extend(target);
  double acc = 0.0;
  for (size_t k = 0; k < 512; ++k) acc += std::norm(p[k] - t[k]);
  return acc / 512.0;
}

pipeline::Y2NetConfig tiny_model(ynet::Fusion fusion = ynet::Fusion::EF) {
  pipeline::Y2NetConfig cfg;
  cfg.aec.F = 3;
  cfg.aec.N = 8;
  cfg.aec.fusion = fusion;
  cfg.pf.F = 3;
  cfg.pf.N = 8;
  return cfg;
}

trainer::TrainUtterance synthetic_utterance(uint32_t seed, size_t frames) {
  trainer::TrainUtterance u;
  for (size_t f = 0; f < frames; ++f) {
    u.x.push_back(random_spectrum(seed + uint32_t(4 * f), 0.3f));
    u.d.push_back(random_spectrum(seed + uint32_t(4 * f) + 1, 0.2f));
    u.s.push_back(random_spectrum(seed + uint32_t(4 * f) + 2, 0.3f));
    dsp::Spectrum y(257);
    dsp::Spectrum n = random_spectrum(seed + uint32_t(4 * f) + 3, 0.05f);
    for (size_t k = 0; k < 257; ++k) y[k] = u.s.back()[k] + u.d.back()[k] + n[k];
    u.y.push_back(std::move(y));
  }
  return u;
}

}  // namespace

TEST_CASE("spectral losses") {
  const auto a = random_spectrum(1);
  const auto b = random_spectrum(2);

  SUBCASE("zero for identical spectra") {
    CHECK(trainer::loss_aec(a, a) == 0.0);
    CHECK(trainer::loss_pf(b, b) == 0.0);
  }
  SUBCASE("single unit bin at k=5 gives 2/512") {
    dsp::Spectrum target(257, {0.0f, 0.0f});
    target[5] = {1.0f, 0.0f};
    const dsp::Spectrum zero(257, {0.0f, 0.0f});
    CHECK(trainer::loss_aec(zero, target) == doctest::Approx(2.0 / 512.0).epsilon(1e-12));
  }
  SUBCASE("quadratic scaling") {
    const double base = trainer::loss_pf(a, b);
    dsp::Spectrum a2 = a, b2 = b;
    for (auto& v : a2) v *= 3.0f;
    for (auto& v : b2) v *= 3.0f;
    CHECK(trainer::loss_pf(a2, b2) == doctest::Approx(9.0 * base).epsilon(1e-5));
  }
  SUBCASE("weighted half-spectrum form equals the brute-force 512-bin sum") {
    std::mt19937 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      const auto p = random_spectrum(100 + uint32_t(rep));
      const auto t = random_spectrum(200 + uint32_t(rep));
      const double fast = trainer::spectral_mse(p, t, 512);
      const double slow = brute_force_mse(p, t);
      CHECK(std::abs(fast - slow) / std::max(slow, 1e-30) < 1e-12);
    }
  }
  SUBCASE("joint loss is the convex combination") {
    CHECK(trainer::loss_joint(4.0, 8.0, 0.0) == 8.0);
    CHECK(trainer::loss_joint(4.0, 8.0, 1.0) == 4.0);
    CHECK(trainer::loss_joint(4.0, 8.0, 0.25) == doctest::Approx(7.0));
    CHECK_THROWS(trainer::loss_joint(1.0, 1.0, 1.5));
  }
  SUBCASE("tensor loss agrees with the spectrum loss") {
    const auto w = trainer::make_loss_weights<float>(260, 257, 512);
    const auto pt = dsp::pack_features<float>(a, 260);
    const auto tt = dsp::pack_features<float>(b, 260);
    const auto lt = trainer::spectral_mse_tensor(pt, tt, w);
    CHECK(double(lt.at(0)) == doctest::Approx(trainer::spectral_mse(a, b, 512)).epsilon(1e-5));
  }
  SUBCASE("padding rows are excluded from the loss") {
    const auto w = trainer::make_loss_weights<float>(260, 257, 512);
    auto data = std::vector<float>(260 * 2, 0.0f);
    data[2 * 258] = 123.0f;  // padding row
    const auto pred = tc::Tensor::from_vector({260, 1, 2}, data);
    const auto target = tc::Tensor::zeros({260, 1, 2});
    CHECK(trainer::spectral_mse_tensor(pred, target, w).at(0) == 0.0f);
  }
}

TEST_CASE("learning rate schedule follows the decay sequence") {
  trainer::LrSchedule sched(5e-3, 0.6, 3, 5e-4);
  std::vector<double> lrs_used;
  bool stopped = false;
  for (int epoch = 0; epoch < 100 && !stopped; ++epoch) {
    lrs_used.push_back(sched.lr());
    stopped = !sched.on_epoch(false);
  }
  REQUIRE(lrs_used.size() == 15);  // 5 rates, 3 epochs each
  const double want[5] = {5e-3, 3e-3, 1.8e-3, 1.08e-3, 6.48e-4};
  for (size_t i = 0; i < lrs_used.size(); ++i)
    CHECK(lrs_used[i] == doctest::Approx(want[i / 3]).epsilon(1e-9));
  CHECK(stopped);

  SUBCASE("improvement resets the plateau counter") {
    trainer::LrSchedule s2(5e-3, 0.6, 3, 5e-4);
    s2.on_epoch(false);
    s2.on_epoch(false);
    s2.on_epoch(true);  // reset
    s2.on_epoch(false);
    s2.on_epoch(false);
    CHECK(s2.lr() == 5e-3);
    s2.on_epoch(false);
    CHECK(s2.lr() == doctest::Approx(3e-3));
  }
}

TEST_CASE("window extraction and batching") {
  std::vector<trainer::TrainUtterance> data;
  data.push_back(synthetic_utterance(1, 753));  // 10 s at 212-sample shift
  const auto windows = trainer::make_windows(data, 50);
  CHECK(windows.size() == 15);  // remainder dropped
  CHECK(windows[0].begin == 0);
  CHECK(windows[14].begin == 700);

  const auto b1 = trainer::make_batches(15, 4, 99);
  const auto b2 = trainer::make_batches(15, 4, 99);
  const auto b3 = trainer::make_batches(15, 4, 100);
  CHECK(b1 == b2);
  CHECK(b1 != b3);
  REQUIRE(b1.size() == 4);  // 4+4+4+3
  CHECK(b1.back().size() == 3);
}

TEST_CASE("eval_window basics") {
  const auto model = tiny_model();
  auto data = std::vector<trainer::TrainUtterance>{synthetic_utterance(7, 12)};
  const auto windows = trainer::make_windows(data, 6);
  REQUIRE(windows.size() == 2);

  SUBCASE("pretrain loss matches the spectrum-domain loss of the runtime") {
    auto params = trainer::build_phase_params(model, trainer::Phase::PretrainAec, 5);
    const auto wl = trainer::eval_window(model, trainer::Phase::PretrainAec, 0.25, params,
                                         windows[0], 6, false);
    // independent route: run the float pipeline's AEC and average spectrum losses
    pipeline::Y2NetConfig aec_only = model;
    auto bound = tc::BoundParams<float>::bind(params, false);
    auto state = ynet::init_state<float>(model.aec);
    double want = 0.0;
    for (int f = 0; f < 6; ++f) {
      const auto xt = dsp::pack_features<float>(data[0].x[size_t(f)], 260);
      const auto yt = dsp::pack_features<float>(data[0].y[size_t(f)], 260);
      const auto dhat_t = ynet::ynet_forward(xt, yt, state, model.aec, bound, "aec");
      // compare in the packed domain (no hermitian forcing): weighted sse
      const auto w = trainer::make_loss_weights<float>(260, 257, 512);
      const auto target = dsp::pack_features<float>(data[0].d[size_t(f)], 260);
      want += double(trainer::spectral_mse_tensor(dhat_t, target, w).at(0)) / 6.0;
    }
    CHECK(wl.j_aec == doctest::Approx(want).epsilon(1e-5));
  }

  SUBCASE("joint gradients reach the AEC through both loss terms") {
    auto params = trainer::build_phase_params(model, trainer::Phase::Joint, 6);
    const auto with_aec = trainer::eval_window(model, trainer::Phase::Joint, 0.25, params,
                                               windows[0], 6, true);
    const auto pf_only = trainer::eval_window(model, trainer::Phase::Joint, 0.0, params,
                                              windows[0], 6, true);
    // locate an AEC weight gradient
    size_t aec_index = params.size();
    const auto& items = params.items();
    for (size_t i = 0; i < items.size(); ++i)
      if (items[i].name == "aec.enc1.w") aec_index = i;
    REQUIRE(aec_index < params.size());

    double norm_with = 0.0, norm_pf = 0.0, diff = 0.0;
    for (size_t i = 0; i < with_aec.grads[aec_index].size(); ++i) {
      norm_with += std::abs(with_aec.grads[aec_index][i]);
      norm_pf += std::abs(pf_only.grads[aec_index][i]);
      diff += std::abs(with_aec.grads[aec_index][i] - pf_only.grads[aec_index][i]);
    }
    CHECK(norm_with > 0.0);  // alpha = 0.25: both terms contribute
    CHECK(norm_pf > 0.0);    // alpha = 0: PF term alone still reaches the AEC
    CHECK(diff > 0.0);       // and the AEC term adds a distinct contribution
  }

  SUBCASE("joint loss is the convex combination of the stage losses") {
    auto params = trainer::build_phase_params(model, trainer::Phase::Joint, 8);
    const auto wl = trainer::eval_window(model, trainer::Phase::Joint, 0.25, params, windows[1], 6,
                                         false);
    CHECK(wl.j == doctest::Approx(0.25 * wl.j_aec + 0.75 * wl.j_pf).epsilon(1e-6));
  }
}

TEST_CASE("train loop mechanics") {
  auto model = tiny_model();
  std::vector<trainer::TrainUtterance> train_data{synthetic_utterance(11, 16)};
  std::vector<trainer::TrainUtterance> val_data{synthetic_utterance(12, 8)};

  trainer::TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.bptt_len = 8;
  cfg.max_epochs = 3;
  cfg.phase = trainer::Phase::PretrainAec;
  cfg.threads = 1;
  cfg.seed = 3;

  SUBCASE("history is reproducible and improves on a tiny problem") {
    auto p1 = trainer::build_phase_params(model, cfg.phase, 21);
    auto p2 = trainer::build_phase_params(model, cfg.phase, 21);
    const auto r1 = trainer::train(cfg, model, std::move(p1), train_data, val_data);
    const auto r2 = trainer::train(cfg, model, std::move(p2), train_data, val_data);
    REQUIRE(r1.history.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
      CHECK(r1.history[i].train_j == r2.history[i].train_j);
      CHECK(r1.history[i].val_j == r2.history[i].val_j);
      CHECK(r1.history[i].lr == 5e-3);
    }
    CHECK(r1.best_epoch >= 1);
  }

  SUBCASE("validation does not mutate parameters") {
    auto params = trainer::build_phase_params(model, cfg.phase, 22);
    const auto before = params;
    const auto windows = trainer::make_windows(val_data, cfg.bptt_len);
    (void)trainer::eval_window(model, cfg.phase, cfg.alpha, params, windows[0], cfg.bptt_len, false);
    for (size_t i = 0; i < params.size(); ++i)
      CHECK(params.items()[i].value == before.items()[i].value);
  }

  SUBCASE("adopting pretrained AEC weights") {
    auto pre = trainer::build_phase_params(model, trainer::Phase::PretrainAec, 23);
    pre.at("aec.enc1.w").value[0] = 42.0f;
    auto joint = trainer::build_phase_params(model, trainer::Phase::Joint, 24);
    trainer::adopt_aec_weights(joint, pre);
    CHECK(joint.at("aec.enc1.w").value[0] == 42.0f);
    CHECK(joint.contains("pf.enc1.w"));
  }

  SUBCASE("too-short utterances rejected") {
    std::vector<trainer::TrainUtterance> tiny{synthetic_utterance(13, 4)};
    auto params = trainer::build_phase_params(model, cfg.phase, 25);
    CHECK_THROWS(trainer::train(cfg, model, std::move(params), tiny, val_data));
  }
}

TEST_CASE("threaded gradient reduction is thread-count invariant") {
  const auto model = tiny_model();
  std::vector<trainer::TrainUtterance> data{synthetic_utterance(31, 16)};
  trainer::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.bptt_len = 4;
  cfg.max_epochs = 1;
  cfg.phase = trainer::Phase::PretrainAec;
  cfg.seed = 9;

  auto run_with_threads = [&](int threads) {
    cfg.threads = threads;
    auto params = trainer::build_phase_params(model, cfg.phase, 77);
    return trainer::train(cfg, model, std::move(params), data, data).history[0];
  };
  const auto a = run_with_threads(1);
  const auto b = run_with_threads(3);
  CHECK(a.train_j == b.train_j);
  CHECK(a.val_j == b.val_j);
}
