#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "y2aec/dsp/wav.hpp"
#include "y2aec/lem/synth.hpp"

using namespace y2aec;
namespace fs = std::filesystem;

TEST_CASE("impulse response generator") {
  SUBCASE("decay envelope reaches -60 dB at T60") {
    for (double t60 : {0.2, 0.5, 1.2}) {
      const int n60 = int(t60 * 16000);
      const double ratio = lem::ir_decay_envelope(n60, t60, 16000) / lem::ir_decay_envelope(0, t60, 16000);
      CHECK(ratio == doctest::Approx(1e-3).epsilon(1e-9));  // amplitude 1e-3 = -60 dB energy
    }
  }
  SUBCASE("unit energy") {
    const auto h = lem::gen_ir(0.5, 8000, 42);
    double energy = 0.0;
    for (float v : h) energy += double(v) * v;
    CHECK(energy == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("deterministic under seed") {
    const auto a = lem::gen_ir(0.7, 4000, 7);
    const auto b = lem::gen_ir(0.7, 4000, 7);
    const auto c = lem::gen_ir(0.7, 4000, 8);
    CHECK(a == b);
    CHECK(a != c);
  }
  SUBCASE("rejects bad arguments") {
    CHECK_THROWS(lem::gen_ir(0.0, 100, 1));
    CHECK_THROWS(lem::gen_ir(-1.0, 100, 1));
    CHECK_THROWS(lem::gen_ir(0.5, 0, 1));
  }
}

TEST_CASE("nonlinear distortion") {
  const dsp::Signal sig{{0.8f, -0.3f, 0.1f, -0.9f}, 16000};
  SUBCASE("hard clip at 1 is identity within range") {
    const auto out = lem::nonlinear_distort(sig, {lem::DistortionKind::HardClip, 1.0});
    CHECK(out.samples == sig.samples);
  }
  SUBCASE("hard clip at 0.5 clamps") {
    const auto out = lem::nonlinear_distort(sig, {lem::DistortionKind::HardClip, 0.5});
    CHECK(out.samples[0] == 0.5f);
    CHECK(out.samples[1] == -0.3f);
    CHECK(out.samples[3] == -0.5f);
  }
  SUBCASE("soft tanh approaches identity for small drive") {
    const auto out = lem::nonlinear_distort(sig, {lem::DistortionKind::SoftTanh, 1e-3});
    for (size_t i = 0; i < sig.samples.size(); ++i)
      CHECK(std::abs(out.samples[i] - sig.samples[i]) < 1e-5f);
  }
  SUBCASE("invalid parameters rejected") {
    CHECK_THROWS(lem::nonlinear_distort(sig, {lem::DistortionKind::HardClip, 0.0}));
    CHECK_THROWS(lem::nonlinear_distort(sig, {lem::DistortionKind::SoftTanh, -1.0}));
  }
}

TEST_CASE("echo synthesis") {
  SUBCASE("unit impulse response passes the signal through") {
    const auto x = testutil::noise_signal(4000, 3);
    std::vector<float> ir{1.0f};
    const auto d = lem::make_echo(x, ir, {});
    REQUIRE(d.samples.size() == x.samples.size());
    for (size_t i = 0; i < x.samples.size(); ++i)
      CHECK(d.samples[i] == doctest::Approx(x.samples[i]).epsilon(2e-4));
  }
  SUBCASE("delayed impulse shifts the signal") {
    const auto x = testutil::noise_signal(1000, 4);
    std::vector<float> ir(10, 0.0f);
    ir[7] = 1.0f;
    const auto d = lem::make_echo(x, ir, {});
    for (size_t i = 0; i < 7; ++i) CHECK(std::abs(d.samples[i]) < 1e-4f);
    for (size_t i = 7; i < x.samples.size(); ++i)
      CHECK(std::abs(d.samples[i] - x.samples[i - 7]) < 2e-4f);
  }
  SUBCASE("unit-energy reverberant response roughly preserves noise energy") {
    const auto x = testutil::noise_signal(32000, 5);
    const auto ir = lem::gen_ir(0.4, 6400, 11);
    const auto d = lem::make_echo(x, ir, {});
    double ex = 0.0, ed = 0.0;
    for (float v : x.samples) ex += double(v) * v;
    for (float v : d.samples) ed += double(v) * v;
    CHECK(ed / ex > 0.5);
    CHECK(ed / ex < 1.5);
    CHECK(ed <= ex * 1.5);
  }
}

TEST_CASE("mix hits the requested ratios") {
  const int rate = 16000;
  const size_t len = 32000;
  auto tone = [&](double freq, float amp) {
    std::vector<float> v(len);
    for (size_t i = 0; i < len; ++i)
      v[i] = amp * float(std::sin(2.0 * std::numbers::pi * freq * double(i) / rate));
    return dsp::Signal{std::move(v), rate};
  };
  const auto s = tone(440.0, 0.3f);
  const auto d = tone(313.0, 0.05f);
  const auto n = dsp::Signal{testutil::white_noise(len, 6, 0.02f), rate};

  auto measure = [](const dsp::Signal& a, const dsp::Signal& b, const std::vector<bool>& mask) {
    double pa = 0.0, pb = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
      if (!mask[i]) continue;
      pa += double(a.samples[i]) * a.samples[i];
      pb += double(b.samples[i]) * b.samples[i];
    }
    return 10.0 * std::log10(pa / pb);
  };

  for (double ser : {-10.0, 0.0, 10.0}) {
    for (double snr : {0.0, 20.0, 40.0}) {
      const auto b = lem::mix(s, d, n, ser, snr);
      const auto mask = lem::activity_mask(b.s);
      CHECK(std::abs(measure(b.s, b.d, mask) - ser) < 0.01);
      CHECK(std::abs(measure(b.s, b.n, mask) - snr) < 0.01);
      // exact sum in the quantized domain
      for (size_t i = 0; i < len; i += 997)
        CHECK(b.y.samples[i] == b.s.samples[i] + b.d.samples[i] + b.n.samples[i]);
    }
  }

  SUBCASE("silent near end with finite SER rejected") {
    const dsp::Signal silent{std::vector<float>(len, 0.0f), rate};
    CHECK_THROWS(lem::mix(silent, d, n, 0.0, 20.0));
  }
  SUBCASE("clipping mixture triggers a whole-bundle rescale") {
    const auto loud_s = tone(440.0, 0.9f);
    const auto loud_d = tone(313.0, 0.9f);
    const auto b = lem::mix(loud_s, loud_d, n, -3.0, 30.0);  // echo ~1.27 peak before rescale
    float peak = 0.0f;
    for (size_t i = 0; i < len; ++i) peak = std::max(peak, std::abs(b.y.samples[i]));
    CHECK(peak <= 1.0f);
    const auto mask = lem::activity_mask(b.s);
    CHECK(std::abs(measure(b.s, b.d, mask) - (-3.0)) < 0.01);
  }
}

TEST_CASE("dataset synthesis") {
  const auto dir = fs::temp_directory_path() / "y2aec_lem_test";
  fs::remove_all(dir);
  const auto pools = lem::write_demo_pools(dir / "pools", 5, 2, 4.0);

  lem::DatasetConfig cfg;
  cfg.num_utterances = 3;
  cfg.seed = 77;
  cfg.duration_s = 3.0;
  cfg.mixed_talk = false;
  cfg.talk_type = lem::TalkType::Double;

  SUBCASE("deterministic manifests and exact track sums") {
    const auto a = lem::synth_dataset(cfg, pools, dir / "a");
    const auto b = lem::synth_dataset(cfg, pools, dir / "b");
    REQUIRE(a.size() == 3);
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].seed == b[i].seed);
      CHECK(a[i].t60_s == b[i].t60_s);
      CHECK(a[i].ser_db == b[i].ser_db);
      CHECK(a[i].snr_db == b[i].snr_db);
      CHECK(a[i].t60_s >= 0.2);
      CHECK(a[i].t60_s <= 1.2);

      const auto y = dsp::read_wav(dir / "a" / a[i].y);
      const auto s = dsp::read_wav(dir / "a" / a[i].s);
      const auto d = dsp::read_wav(dir / "a" / a[i].d);
      const auto n = dsp::read_wav(dir / "a" / a[i].n);
      REQUIRE(y.samples.size() == s.samples.size());
      for (size_t j = 0; j < y.samples.size(); ++j)
        REQUIRE(y.samples[j] == s.samples[j] + d.samples[j] + n.samples[j]);
    }
    // byte-identical manifests
    std::ifstream fa(dir / "a" / "manifest.jsonl"), fb(dir / "b" / "manifest.jsonl");
    std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
  }

  SUBCASE("fe-only keeps the near end silent, ne-only keeps the echo silent") {
    cfg.talk_type = lem::TalkType::FeOnly;
    const auto fe = lem::synth_dataset(cfg, pools, dir / "fe");
    const auto s = dsp::read_wav(dir / "fe" / fe[0].s);
    for (float v : s.samples) CHECK(v == 0.0f);

    cfg.talk_type = lem::TalkType::NeOnly;
    const auto ne = lem::synth_dataset(cfg, pools, dir / "ne");
    const auto d = dsp::read_wav(dir / "ne" / ne[0].d);
    for (float v : d.samples) CHECK(v == 0.0f);
  }

  SUBCASE("manifest round trip preserves rows") {
    const auto entries = lem::synth_dataset(cfg, pools, dir / "m");
    const auto back = util::read_manifest(dir / "m" / "manifest.jsonl");
    REQUIRE(back.size() == entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
      CHECK(back[i].id == entries[i].id);
      CHECK(back[i].seed == entries[i].seed);
      CHECK(back[i].talk_type == entries[i].talk_type);
      CHECK(back[i].x == entries[i].x);
      CHECK(back[i].has_components());
    }
  }

  SUBCASE("missing pools rejected") {
    CHECK_THROWS(lem::synth_dataset(cfg, lem::PoolPaths{}, dir / "x"));
  }

  fs::remove_all(dir);
}
