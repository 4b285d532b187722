#pragma once

// Experiment configuration: defaults, JSON (de)serialization and dotted-path
// command-line overrides such as "dir.alpha=0.5".

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sfdoa/arrayproc.hpp"
#include "sfdoa/baseline.hpp"
#include "sfdoa/cluster.hpp"
#include "sfdoa/dpd.hpp"
#include "sfdoa/grid_search.hpp"
#include "sfdoa/roomsim.hpp"

namespace sfdoa {

enum class Method { ThrGmm, DirGmm, GccPhat };

std::string method_name(Method m);      // "THR-GMM", "DIR-GMM", "GCC-PHAT"
Method parse_method(const std::string& s);  // accepts the names above, case-insensitive

struct ExperimentConfig {
  RoomConfig room;  // beta is derived per T60
  /// "calibrated": bisect beta until the simulated Schroeder T60 matches;
  /// "sabine": closed-form Sabine inversion.
  std::string beta_mapping = "calibrated";

  std::vector<double> t60_list{0.0, 0.25, 0.5, 1.0};
  double t60_sweep_snr_db = 40.0;  // diffuse SNR held during the T60 sweep
  std::vector<double> snr_list{40.0, 30.0, 20.0, 10.0, 0.0};
  double snr_sweep_t60 = 0.25;     // T60 held during the SNR sweep
  double sensor_snr_db = 40.0;

  /// WAV paths, or "synthetic:<seed>" for the built-in speech-like generator.
  std::vector<std::string> speakers{"synthetic:1"};
  double synthetic_duration_s = 5.0;

  Eigen::Vector3d array_center{3.9, 2.2, 1.4};
  double source_distance = 1.8;   // used when source_position is unset
  double source_theta_deg = 75.0;
  double source_phi_deg = 35.0;
  std::optional<Eigen::Vector3d> source_position;

  double array_radius = 0.042;
  int array_order = 3;

  StftParams stft;
  double band_f_low = 500.0;
  double reg_max_gain_db = 20.0;

  DpdParams thr{DpdVariant::Thr};
  DpdParams dir{DpdVariant::Dir};
  GmmOptions gmm;
  bool use_gmm = true;

  double grid_resolution_deg = 1.0;
  SearchMode search = SearchMode::Hierarchical;

  std::size_t gcc_mics = 8;
  std::size_t gcc_frame = 1024;
  std::size_t gcc_hop = 512;
  int gcc_interp = 16;

  std::vector<Method> methods{Method::ThrGmm, Method::DirGmm, Method::GccPhat};
  int realizations = 10;
  std::uint64_t master_seed = 20190512;

  /// RIR length in seconds; 0 picks max(0.1, T60) per condition.
  double rir_duration_s = 0.0;
  int workers = 1;
  bool record_times = false;

  void validate() const;
  Eigen::Vector3d source() const;
  /// Direction of the source seen from the array center.
  Direction truth() const;
  ArrayConfig array() const;
  double rir_duration(double t60) const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace sfdoa
