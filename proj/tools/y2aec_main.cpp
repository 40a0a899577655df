// Command-line front-end: dataset synthesis, training, inference,
// evaluation and the real-time benchmark in one binary.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 runtime-budget violation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "y2aec/dsp/wav.hpp"
#include "y2aec/lem/synth.hpp"
#include "y2aec/metrics/eval.hpp"
#include "y2aec/pipeline/y2net.hpp"
#include "y2aec/tc/checkpoint.hpp"
#include "y2aec/trainer/train.hpp"

namespace fs = std::filesystem;
using namespace y2aec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitBudget = 4;

std::pair<double, double> parse_range(const std::string& text, const char* what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    const double v = std::stod(text);
    return {v, v};
  }
  const double lo = std::stod(text.substr(0, colon));
  const double hi = std::stod(text.substr(colon + 1));
  if (hi < lo) throw CLI::ValidationError(std::string(what) + ": range upper bound below lower");
  return {lo, hi};
}

std::vector<fs::path> list_wavs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void write_effective_config(CLI::App* cmd, const fs::path& out_dir) {
  std::ofstream f(out_dir / "run_config.toml", std::ios::trunc);
  f << cmd->config_to_str(true, true);
}

struct TrainCli {
  std::string train_manifest, val_manifest, out_dir;
  std::string phase = "pretrain";
  std::string init_ckpt;
  bool from_scratch = false;
  std::string fusion = "ef";
  int f_aec = 8;
  int f_pf = 8;
  std::string pf_input = "dhat";
  double alpha = 0.25;
  int epochs = 100;
  int batch = 16;
  int bptt = 50;
  double lr = 5e-3;
  uint64_t seed = 1;
  int threads = 0;
};

int run_train(const TrainCli& a) {
  pipeline::Y2NetConfig model;
  model.aec.F = a.f_aec;
  model.aec.fusion = a.fusion == "lf" ? ynet::Fusion::LF : ynet::Fusion::EF;
  model.pf.F = a.f_pf;
  model.pf_input = a.pf_input == "x" ? pipeline::PfInput::X : pipeline::PfInput::Dhat;

  trainer::TrainConfig cfg;
  cfg.alpha = a.alpha;
  cfg.max_epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.bptt_len = a.bptt;
  cfg.lr0 = a.lr;
  cfg.seed = a.seed;
  cfg.threads = a.threads;

  if (a.phase == "pretrain") {
    cfg.phase = trainer::Phase::PretrainAec;
  } else if (a.phase == "joint") {
    cfg.phase = trainer::Phase::Joint;
  } else if (a.phase == "single-stage") {
    cfg.phase = trainer::Phase::SingleStage;
    model.mode = pipeline::Mode::SingleStage;
  } else {
    std::cerr << "unknown phase: " << a.phase << "\n";
    return kExitConfig;
  }

  auto params = trainer::build_phase_params(model, cfg.phase, a.seed);
  if (cfg.phase == trainer::Phase::Joint) {
    if (a.init_ckpt.empty() && !a.from_scratch) {
      std::cerr << "joint phase needs --init <pretrained aec checkpoint> or --from-scratch\n";
      return kExitConfig;
    }
    if (!a.init_ckpt.empty())
      trainer::adopt_aec_weights(params, tc::load_checkpoint(a.init_ckpt).params);
  }

  const auto train_data = trainer::load_training_data(a.train_manifest, model.frame);
  const auto val_data = trainer::load_training_data(a.val_manifest, model.frame);

  fs::create_directories(a.out_dir);
  std::ofstream history(fs::path(a.out_dir) / "history.csv", std::ios::trunc);
  history << "epoch,lr,train_j,train_j_aec,train_j_pf,val_j,improved,alpha\n";

  const auto result = trainer::train(cfg, model, std::move(params), train_data, val_data,
                                     [&](const trainer::EpochStats& s) {
                                       history << s.epoch << "," << s.lr << "," << s.train_j << ","
                                               << s.train_j_aec << "," << s.train_j_pf << ","
                                               << s.val_j << "," << (s.improved ? 1 : 0) << ","
                                               << cfg.alpha << "\n";
                                       history.flush();
                                       std::cout << "epoch " << s.epoch << "  lr " << s.lr
                                                 << "  train " << s.train_j << "  val " << s.val_j
                                                 << (s.improved ? "  *" : "") << "\n";
                                     });

  const auto ckpt = fs::path(a.out_dir) / "checkpoint_best.ckpt";
  tc::save_checkpoint(ckpt, pipeline::to_json(model), result.best_params);
  std::cout << "stopped: " << result.stop_reason << "; best val " << result.best_val
            << " at epoch " << result.best_epoch << "\n"
            << "checkpoint: " << ckpt.string() << "\n";
  return 0;
}

int run_infer(const std::string& ckpt_path, const std::string& x_path, const std::string& y_path,
              const std::string& out_path, bool dump_intermediates) {
  const auto ck = tc::load_checkpoint(ckpt_path);
  const auto model = pipeline::y2net_config_from_json(ck.config_json);
  const auto x = dsp::read_wav(x_path);
  const auto y = dsp::read_wav(y_path);
  const auto res = pipeline::process_utterance(x, y, model, ck.params, dump_intermediates);
  dsp::write_wav(out_path, res.shat);
  std::cout << "wrote " << out_path << " (" << res.shat.samples.size() << " samples)\n";

  if (dump_intermediates) {
    const auto base = fs::path(out_path).parent_path();
    const auto stem = fs::path(out_path).stem().string();
    dsp::SpectrumSeq dhat, e;
    dhat.config = e.config = model.frame;
    std::ofstream mask_csv(base / (stem + "_mask.csv"), std::ios::trunc);
    mask_csv << "frame,bin,mask_re,mask_im\n";
    for (size_t l = 0; l < res.frames.size(); ++l) {
      dhat.frames.push_back(res.frames[l].dhat);
      e.frames.push_back(res.frames[l].e);
      for (size_t k = 0; k < res.frames[l].mask.size(); ++k)
        mask_csv << l << "," << k << "," << res.frames[l].mask[k].real() << ","
                 << res.frames[l].mask[k].imag() << "\n";
    }
    dsp::write_wav(base / (stem + "_dhat.wav"), dsp::synthesize(dhat));
    dsp::write_wav(base / (stem + "_e.wav"), dsp::synthesize(e));
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& manifest, const std::string& out_dir,
             std::string method) {
  const auto ck = tc::load_checkpoint(ckpt_path);
  const auto model = pipeline::y2net_config_from_json(ck.config_json);
  pipeline::Y2NetRuntime runtime(model, ck.params);
  if (method.empty())
    method = model.mode == pipeline::Mode::SingleStage ? "single-stage" : "two-stage";

  auto report = metrics::eval_dataset(runtime, manifest, model.frame, method);

  // quick single-threaded RTF on synthetic frames
  std::vector<std::pair<dsp::Spectrum, dsp::Spectrum>> frames;
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> dist(-0.1f, 0.1f);
  for (int i = 0; i < 32; ++i) {
    dsp::Spectrum x(size_t(model.frame.n_bins)), y(size_t(model.frame.n_bins));
    for (auto& b : x) b = {dist(rng), dist(rng)};
    for (auto& b : y) b = {dist(rng), dist(rng)};
    frames.emplace_back(std::move(x), std::move(y));
  }
  report.rtf = metrics::rtf_bench(runtime, frames, model.frame);

  fs::create_directories(out_dir);
  metrics::write_report_csv(fs::path(out_dir) / "report.csv", {report});
  metrics::write_report_json(fs::path(out_dir) / "report.json", {report});
  const auto table = metrics::render_report_table({report});
  std::ofstream(fs::path(out_dir) / "report.txt", std::ios::trunc) << table;
  std::cout << table;
  return 0;
}

int run_bench(const std::string& ckpt_path, int n_frames, int reps, bool enforce_rt) {
  const auto ck = tc::load_checkpoint(ckpt_path);
  const auto model = pipeline::y2net_config_from_json(ck.config_json);
  pipeline::Y2NetRuntime runtime(model, ck.params);

  std::vector<std::pair<dsp::Spectrum, dsp::Spectrum>> frames;
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> dist(-0.1f, 0.1f);
  for (int i = 0; i < n_frames; ++i) {
    dsp::Spectrum x(size_t(model.frame.n_bins)), y(size_t(model.frame.n_bins));
    for (auto& b : x) b = {dist(rng), dist(rng)};
    for (auto& b : y) b = {dist(rng), dist(rng)};
    frames.emplace_back(std::move(x), std::move(y));
  }

  metrics::RtfOptions opt;
  opt.repetitions = reps;
  const double rtf = metrics::rtf_bench(runtime, frames, model.frame, opt);

  const double frame_ms = 1000.0 * model.frame.frame_len / model.frame.sample_rate_hz;
  const double shift_ms = 1000.0 * model.frame.frame_shift / model.frame.sample_rate_hz;
  std::cout.setf(std::ios::fixed);
  std::cout.precision(2);
  std::cout << "frame length " << frame_ms << " ms, frame shift " << shift_ms
            << " ms, algorithmic latency " << model.frame.algorithmic_latency_ms() << " ms\n";
  std::cout << "RTF " << rtf << " (single-threaded, median of " << reps << " passes over "
            << n_frames << " frames)\n";
  if (enforce_rt && rtf >= 1.0) {
    std::cerr << "real-time budget violated: RTF >= 1.0\n";
    return kExitBudget;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage acoustic echo cancellation and noise suppression"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override file values");

  // ---- synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with echo, speech and noise");
  int synth_n = 10;
  uint64_t synth_seed = 1;
  double synth_duration = 10.0;
  std::string synth_out, synth_pools, synth_talk = "double";
  std::string t60_range = "0.2:1.2", ser_range = "-10:10", snr_range = "0:40";
  double nonlinear_prob = 0.8;
  bool demo_pools = false;
  synth->add_option("--out", synth_out, "Output directory")->required()->envname("Y2AEC_OUT");
  synth->add_option("--n", synth_n, "Number of utterances");
  synth->add_option("--seed", synth_seed, "Dataset seed");
  synth->add_option("--duration", synth_duration, "Utterance length in seconds");
  synth->add_option("--pools", synth_pools, "Directory with fe/, ne/, noise/ wav subdirectories")
      ->envname("Y2AEC_POOLS");
  synth->add_flag("--demo-pools", demo_pools, "Generate built-in demo source material");
  synth->add_option("--talk", synth_talk, "double | fe-only | ne-only | mixed");
  synth->add_option("--t60", t60_range, "T60 range in seconds, lo:hi");
  synth->add_option("--ser", ser_range, "SER range in dB, lo:hi");
  synth->add_option("--snr", snr_range, "SNR range in dB, lo:hi");
  synth->add_option("--nonlinear-prob", nonlinear_prob, "Probability of loudspeaker distortion");

  // ---- train
  auto* train = app.add_subcommand("train", "Train the model (pretrain, joint or single-stage)");
  TrainCli ta;
  train->add_option("--train", ta.train_manifest, "Training manifest")->required();
  train->add_option("--val", ta.val_manifest, "Validation manifest")->required();
  train->add_option("--out", ta.out_dir, "Run directory")->required()->envname("Y2AEC_OUT");
  train->add_option("--phase", ta.phase, "pretrain | joint | single-stage");
  train->add_option("--init", ta.init_ckpt, "Pretrained AEC checkpoint for the joint phase");
  train->add_flag("--from-scratch", ta.from_scratch, "Allow joint training without a pretrained AEC");
  train->add_option("--fusion", ta.fusion, "AEC encoder fusion: ef | lf");
  train->add_option("--F", ta.f_aec, "Feature maps of the (AEC or single) net");
  train->add_option("--pf-F", ta.f_pf, "Feature maps of the postfilter net");
  train->add_option("--pf-input", ta.pf_input, "Second postfilter input: dhat | x");
  train->add_option("--alpha", ta.alpha, "Joint loss weight");
  train->add_option("--epochs", ta.epochs, "Maximum epochs");
  train->add_option("--batch", ta.batch, "Batch size");
  train->add_option("--bptt", ta.bptt, "Unrolled frames per window");
  train->add_option("--lr", ta.lr, "Initial learning rate");
  train->add_option("--seed", ta.seed, "Training seed");
  train->add_option("--threads", ta.threads, "Worker threads (0 = physical cores)");

  // ---- infer
  auto* infer = app.add_subcommand("infer", "Enhance one utterance");
  std::string in_ckpt, in_x, in_y, in_out;
  bool dump = false;
  infer->add_option("--checkpoint", in_ckpt, "Model checkpoint")->required();
  infer->add_option("--x", in_x, "Loudspeaker reference wav")->required();
  infer->add_option("--y", in_y, "Microphone wav")->required();
  infer->add_option("--out", in_out, "Enhanced output wav")->required();
  infer->add_flag("--dump-intermediates", dump, "Also write echo estimate, residual and mask");

  // ---- eval
  auto* eval = app.add_subcommand("eval", "Run the metric suite on a synthetic dataset");
  std::string ev_ckpt, ev_manifest, ev_out, ev_method;
  eval->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required();
  eval->add_option("--manifest", ev_manifest, "Dataset manifest with component tracks")->required();
  eval->add_option("--out", ev_out, "Report directory")->required()->envname("Y2AEC_OUT");
  eval->add_option("--method-name", ev_method, "Row label in the report");

  // ---- bench
  auto* bench = app.add_subcommand("bench", "Measure the real-time factor");
  std::string be_ckpt;
  int be_frames = 64, be_reps = 20;
  bool enforce_rt = false;
  bench->add_option("--checkpoint", be_ckpt, "Model checkpoint")->required();
  bench->add_option("--frames", be_frames, "Frames per pass");
  bench->add_option("--reps", be_reps, "Passes (median taken)");
  bench->add_flag("--enforce-rt", enforce_rt, "Exit nonzero when RTF >= 1.0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      lem::DatasetConfig cfg;
      cfg.num_utterances = synth_n;
      cfg.seed = synth_seed;
      cfg.duration_s = synth_duration;
      cfg.t60_range = parse_range(t60_range, "--t60");
      cfg.ser_range = parse_range(ser_range, "--ser");
      cfg.snr_range = parse_range(snr_range, "--snr");
      cfg.nonlinear_prob = nonlinear_prob;
      if (synth_talk == "double")
        cfg.talk_type = lem::TalkType::Double;
      else if (synth_talk == "fe-only")
        cfg.talk_type = lem::TalkType::FeOnly;
      else if (synth_talk == "ne-only")
        cfg.talk_type = lem::TalkType::NeOnly;
      else if (synth_talk == "mixed")
        cfg.mixed_talk = true;
      else
        throw CLI::ValidationError("--talk: unknown value " + synth_talk);

      lem::PoolPaths pools;
      if (demo_pools) {
        pools = lem::write_demo_pools(fs::path(synth_out) / "pools", synth_seed ^ 0x9e3779b9ull);
      } else if (!synth_pools.empty()) {
        pools.fe = list_wavs(fs::path(synth_pools) / "fe");
        pools.ne = list_wavs(fs::path(synth_pools) / "ne");
        pools.noise = list_wavs(fs::path(synth_pools) / "noise");
      } else {
        std::cerr << "synth needs --pools DIR or --demo-pools\n";
        return kExitConfig;
      }
      const auto entries = lem::synth_dataset(cfg, pools, synth_out);
      write_effective_config(synth, synth_out);
      std::cout << "wrote " << entries.size() << " utterances to " << synth_out << "\n";
      return 0;
    }
    if (train->parsed()) {
      fs::create_directories(ta.out_dir);
      write_effective_config(train, ta.out_dir);
      return run_train(ta);
    }
    if (infer->parsed()) return run_infer(in_ckpt, in_x, in_y, in_out, dump);
    if (eval->parsed()) {
      fs::create_directories(ev_out);
      write_effective_config(eval, ev_out);
      return run_eval(ev_ckpt, ev_manifest, ev_out, ev_method);
    }
    if (bench->parsed()) return run_bench(be_ckpt, be_frames, be_reps, enforce_rt);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
