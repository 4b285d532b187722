#pragma once

// Experiment orchestration: scene simulation with caching, the three
// localization methods, sweeps, timing and result files.

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sfdoa/config.hpp"

namespace sfdoa {

/// Great-circle angle in degrees.
double angular_error(const Direction& est, const Direction& truth);

struct BetaChoice {
  double beta = 0.0;
  double sabine_beta = 0.0;
  bool sabine_floored = false;
  double measured_t60 = 0.0;  // Schroeder estimate at the array center (calibrated mapping only)
};

/// Reflection coefficient used for a T60 under cfg.beta_mapping. Results are
/// memoized per geometry, so repeated calls are cheap.
BetaChoice scene_beta(const ExperimentConfig& cfg, double t60);

struct Condition {
  double t60_s = 0.0;
  double diffuse_snr_db = 40.0;
};

/// Union of the T60 sweep (at t60_sweep_snr_db) and the SNR sweep (at
/// snr_sweep_t60) without duplicates, sorted by T60 ascending then SNR
/// descending.
std::vector<Condition> sweep_conditions(const ExperimentConfig& cfg);

struct ConditionResult {
  Method method = Method::DirGmm;
  double t60_s = 0.0;
  double diffuse_snr_db = 0.0;
  int realization = 0;
  std::string speaker;
  double error_deg = 0.0;      // NaN when the condition failed
  std::size_t bins_selected = 0;
  double time_s = 0.0;         // NaN when timing was not recorded

  bool failed() const;
};

/// Canonical order: method, T60, SNR (descending), realization, speaker.
bool canonical_less(const ConditionResult& a, const ConditionResult& b);

/// Runs conditions with shared, cached simulation state. Thread-safe: the
/// sweep may call run_group from several workers.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg);
  ~Experiment();

  const ExperimentConfig& config() const { return cfg_; }
  const ArrayConfig& array() const { return array_; }
  BandSelection band() const;
  const SteeringSearch& search() const;

  /// Every method in cfg.methods for one (T60, realization) and the given
  /// SNRs. Simulation and noise generation are shared across the methods
  /// and excluded from their timings.
  std::vector<ConditionResult> run_group(double t60, const std::vector<double>& snrs, int realization);

  ConditionResult run_condition(Method method, double t60, double diffuse_snr_db, int realization);

  /// Noisy microphone signals for one realization (sensor noise only).
  MicSignals mic_signals(double t60, int realization);
  /// PWD tensor with diffuse noise, as seen by the DPD tests.
  TimeFreqTensor coefficients(double t60, double diffuse_snr_db, int realization);

  const std::vector<ImpulseResponse>& rirs(double t60);
  std::string speaker_label(int realization) const;

 private:
  struct Scene;
  struct Impl;
  const Scene& scene(double t60);
  std::vector<ConditionResult> run_methods(double t60, const std::vector<double>& snrs, int realization,
                                           const std::vector<Method>& methods);
  const std::vector<double>& speaker_signal(std::size_t index);

  ExperimentConfig cfg_;
  ArrayConfig array_;
  std::unique_ptr<Impl> impl_;
};

std::vector<ConditionResult> sweep(const ExperimentConfig& cfg);
std::vector<ConditionResult> sweep(Experiment& exp);

struct TimingRow {
  Method method = Method::DirGmm;
  double t60_s = 0.0;
  double diffuse_snr_db = 0.0;
  double mean_time_s = 0.0;
  std::size_t runs = 0;
};

struct TimingTable {
  std::vector<TimingRow> per_condition;
  std::map<Method, double> mean_time_s;  // averaged over all conditions
  double thr_dir_ratio = 0.0;            // NaN when either method is missing
  bool dir_faster_everywhere = false;
};

TimingTable timing_table(const std::vector<ConditionResult>& results);

/// Serial sweep with timings recorded.
TimingTable bench_timing(const ExperimentConfig& cfg, std::vector<ConditionResult>* results = nullptr);

struct ErrorStats {
  std::size_t count = 0;   // finite errors
  std::size_t failed = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

/// Quantiles by linear interpolation between order statistics; NaN when no
/// finite errors exist.
ErrorStats error_stats(std::vector<double> errors);

/// Stats of every (method, T60, SNR) group present in `results`.
struct GroupStats {
  Method method;
  double t60_s;
  double diffuse_snr_db;
  ErrorStats stats;
};
std::vector<GroupStats> group_stats(const std::vector<ConditionResult>& results);

/// results.csv, summary.json, t60_sweep.csv, snr_sweep.csv and (when any
/// time was recorded) timing.csv. Creates `out_dir` if needed.
void emit_results(const std::vector<ConditionResult>& results, const ExperimentConfig& cfg,
                  const std::string& out_dir);

void write_results_csv(const std::string& path, const std::vector<ConditionResult>& results);
std::vector<ConditionResult> read_results_csv(const std::string& path);

/// Output directory: SFDOA_OUT_DIR when set, else `fallback`.
std::string output_dir(const std::string& fallback = "out");

}  // namespace sfdoa
