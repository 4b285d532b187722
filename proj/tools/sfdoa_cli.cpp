#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfdoa/errors.hpp"
#include "sfdoa/harness.hpp"
#include "sfdoa/signal.hpp"
#include "sfdoa/wav.hpp"

using namespace sfdoa;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ExperimentConfig build_config(const Common& c) {
  nlohmann::json doc = nlohmann::json::object();
  if (!c.config_path.empty()) {
    std::ifstream is(c.config_path);
    if (!is) throw IoError("cannot open configuration " + c.config_path);
    doc = nlohmann::json::parse(is, nullptr, true, true);
  }
  for (const auto& o : c.overrides) apply_override(doc, o);
  if (c.seed) doc["master_seed"] = *c.seed;
  return config_from_json(doc);
}

std::string out_dir(const Common& c) { return c.out_dir.empty() ? output_dir("out") : c.out_dir; }

std::string path_in(const Common& c, const std::string& given, const std::string& name) {
  if (!given.empty()) return given;
  const std::string dir = out_dir(c);
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

void print_stats(const std::vector<ConditionResult>& rows) {
  std::printf("%-9s %6s %6s %4s %6s %9s %9s %9s\n", "method", "t60_s", "snr_db", "n", "failed", "median", "q1", "q3");
  for (const auto& g : group_stats(rows))
    std::printf("%-9s %6.2f %6.1f %4zu %6zu %9.3f %9.3f %9.3f\n", method_name(g.method).c_str(), g.t60_s,
                g.diffuse_snr_db, g.stats.count, g.stats.failed, g.stats.median, g.stats.q1, g.stats.q3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spherical-array DoA estimation benchmark (THR/DIR direct-path dominance, GCC-PHAT)"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON configuration file");
  app.add_option("--set", common.overrides, "Override a configuration key, e.g. --set dir.alpha=0.5");
  app.add_option("--seed", common.seed, "Master seed");
  app.add_option("-o,--out", common.out_dir, "Output directory (default: $SFDOA_OUT_DIR or ./out)");

  // simulate-rir
  auto* rir_cmd = app.add_subcommand("simulate-rir", "Simulate one room impulse response");
  double rir_t60 = 0.5;
  int rir_mic = -1;
  double rir_duration = 0.0;
  std::string rir_output;
  rir_cmd->add_option("--t60", rir_t60, "Target reverberation time (s)");
  rir_cmd->add_option("--mic", rir_mic, "Receiver microphone index (-1: array center)");
  rir_cmd->add_option("--duration", rir_duration, "Response length in seconds (default from config)");
  rir_cmd->add_option("--output", rir_output, "Output file (.wav float32 or .bin raw)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write the noisy microphone signals of one condition");
  double syn_t60 = 0.25;
  int syn_real = 0;
  std::optional<double> syn_snr;
  std::string syn_output;
  synth_cmd->add_option("--t60", syn_t60, "Reverberation time (s)");
  synth_cmd->add_option("--realization", syn_real, "Noise realization index");
  synth_cmd->add_option("--diffuse-snr", syn_snr, "Also add diffuse noise at this SNR (dB)");
  synth_cmd->add_option("--output", syn_output, "Output WAV (32 channels, float32)");

  // localize
  auto* loc_cmd = app.add_subcommand("localize", "Run one condition and print the result");
  std::string loc_method = "DIR-GMM";
  double loc_t60 = 0.25, loc_snr = 40.0;
  int loc_real = 0;
  loc_cmd->add_option("--method", loc_method, "THR-GMM, DIR-GMM or GCC-PHAT");
  loc_cmd->add_option("--t60", loc_t60, "Reverberation time (s)");
  loc_cmd->add_option("--snr", loc_snr, "Diffuse-noise SNR (dB)");
  loc_cmd->add_option("--realization", loc_real, "Noise realization index");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the T60 and SNR sweeps and write result files");
  std::optional<int> sweep_workers;
  bool sweep_times = false;
  sweep_cmd->add_option("--workers", sweep_workers, "Concurrent condition groups");
  sweep_cmd->add_flag("--record-times", sweep_times, "Record localization wall-clock (forces one worker)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Serial sweep with timings; reports the THR/DIR runtime ratio");

  // dump-bins
  auto* dump_cmd = app.add_subcommand("dump-bins", "Per-bin test values and DoA samples as CSV");
  std::string dump_variant = "dir";
  double dump_t60 = 0.25, dump_snr = 40.0;
  int dump_real = 0;
  std::string dump_output;
  dump_cmd->add_option("--variant", dump_variant, "thr or dir")->check(CLI::IsMember({"thr", "dir"}));
  dump_cmd->add_option("--t60", dump_t60, "Reverberation time (s)");
  dump_cmd->add_option("--snr", dump_snr, "Diffuse-noise SNR (dB)");
  dump_cmd->add_option("--realization", dump_real, "Noise realization index");
  dump_cmd->add_option("--output", dump_output, "Output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = build_config(common);

    if (*rir_cmd) {
      cfg.validate();
      RoomConfig room = cfg.room;
      const BetaChoice beta = scene_beta(cfg, rir_t60);
      room.beta = beta.beta;
      const auto arr = cfg.array();
      if (rir_mic >= static_cast<int>(arr.mic_count())) throw ArgumentError("--mic out of range");
      const Eigen::Vector3d rcv =
          rir_mic < 0 ? cfg.array_center : arr.positions(cfg.array_center)[static_cast<std::size_t>(rir_mic)];
      const double dur = rir_duration > 0.0 ? rir_duration : cfg.rir_duration(rir_t60);
      const ImpulseResponse ir = simulate_rir(room, cfg.source(), rcv, dur);
      const std::string path = path_in(common, rir_output, "rir.wav");
      if (std::filesystem::path(path).extension() == ".bin")
        write_rir_binary(path, ir);
      else
        write_wav_float(path, {ir.samples}, ir.fs);
      nlohmann::json info{{"file", path}, {"beta", beta.beta}, {"beta_mapping", cfg.beta_mapping},
                          {"sabine_beta", beta.sabine_beta}, {"sabine_floored", beta.sabine_floored},
                          {"samples", ir.samples.size()}, {"fs", ir.fs}};
      try {
        info["schroeder_t60_s"] = estimate_t60_schroeder(ir);
      } catch (const EstimationError& e) {
        info["schroeder_t60_s"] = nullptr;
      }
      if (rir_t60 > 0.0) info["critical_distance_m"] = critical_distance(room, rir_t60);
      std::cout << info.dump(2) << '\n';
    } else if (*synth_cmd) {
      Experiment exp(cfg);
      MicSignals sig = exp.mic_signals(syn_t60, syn_real);
      if (syn_snr) {
        const TimeFreqTensor a = pwd_transform(stft(sig, cfg.stft), exp.array(), exp.band(), cfg.reg_max_gain_db,
                                               cfg.room.speed_of_sound);
        const double var = mean_coefficient_power(a) / std::pow(10.0, *syn_snr / 10.0);
        const MicSignals dn = diffuse_noise_mic(exp.array(), exp.band(), cfg.stft, sig.fs, cfg.room.speed_of_sound,
                                                sig.length(), var, mix_seed(cfg.master_seed, {0xD1FFu}));
        for (std::size_t q = 0; q < sig.count(); ++q)
          for (std::size_t i = 0; i < sig.length(); ++i) sig.channels[q][i] += dn.channels[q][i];
      }
      const std::string path = path_in(common, syn_output, "mics.wav");
      write_wav_float(path, sig.channels, sig.fs);
      std::cout << path << ": " << sig.count() << " channels, " << sig.length() << " samples\n";
    } else if (*loc_cmd) {
      Experiment exp(cfg);
      const auto r = exp.run_condition(parse_method(loc_method), loc_t60, loc_snr, loc_real);
      const Direction truth = cfg.truth();
      nlohmann::json out{{"method", method_name(r.method)},
                         {"t60_s", r.t60_s},
                         {"diffuse_snr_db", r.diffuse_snr_db},
                         {"realization", r.realization},
                         {"speaker", r.speaker},
                         {"error_deg", r.failed() ? nlohmann::json(nullptr) : nlohmann::json(r.error_deg)},
                         {"bins_selected", r.bins_selected},
                         {"truth_deg", {truth.theta * 180.0 / kPi, truth.phi * 180.0 / kPi}}};
      std::cout << out.dump(2) << '\n';
    } else if (*sweep_cmd) {
      if (sweep_workers) cfg.workers = *sweep_workers;
      if (sweep_times) cfg.record_times = true;
      const auto rows = sweep(cfg);
      const std::string dir = out_dir(common);
      emit_results(rows, cfg, dir);
      print_stats(rows);
      std::cout << "wrote " << rows.size() << " rows to " << dir << '\n';
    } else if (*bench_cmd) {
      std::vector<ConditionResult> rows;
      const TimingTable t = bench_timing(cfg, &rows);
      ExperimentConfig timed = cfg;
      timed.record_times = true;
      emit_results(rows, timed, out_dir(common));
      std::printf("%-9s %6s %6s %10s\n", "method", "t60_s", "snr_db", "mean_s");
      for (const auto& row : t.per_condition)
        std::printf("%-9s %6.2f %6.1f %10.4f\n", method_name(row.method).c_str(), row.t60_s, row.diffuse_snr_db,
                    row.mean_time_s);
      for (const auto& [m, v] : t.mean_time_s) std::printf("mean %-9s %10.4f s\n", method_name(m).c_str(), v);
      std::printf("THR/DIR ratio %.3f; DIR faster in every condition: %s\n", t.thr_dir_ratio,
                  t.dir_faster_everywhere ? "yes" : "no");
    } else if (*dump_cmd) {
      Experiment exp(cfg);
      const TimeFreqTensor a = exp.coefficients(dump_t60, dump_snr, dump_real);
      DpdParams p = dump_variant == "thr" ? cfg.thr : cfg.dir;
      const DpdResult d = run_dpd(a, p, exp.search(), true);
      const std::string path = path_in(common, dump_output, "bins_" + dump_variant + ".csv");
      write_bin_dump(path, d.records);
      std::cout << path << ": " << d.records.size() << " bins evaluated, " << d.stats.bins_selected
                << " selected\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
