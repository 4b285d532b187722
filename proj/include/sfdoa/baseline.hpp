#pragma once

// Broadband GCC-PHAT baseline: Welch-averaged, phase-transform weighted
// cross-correlations per microphone pair, aggregated by steered response
// power over a direction grid.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "sfdoa/arrayproc.hpp"
#include "sfdoa/sphharm.hpp"

namespace sfdoa {

struct GccOptions {
  std::size_t frame = 1024;  // Welch segment length (samples)
  std::size_t hop = 512;
  int interp = 16;           // lag oversampling factor
  double f_low = 500.0;      // Hz; bins outside [f_low, f_high] are zeroed
  double f_high = 0.0;       // Hz; 0 means Nyquist
  double fs = 16000.0;
};

/// Cross-correlation on a lag grid with step 1/interp samples covering
/// [-max_lag, max_lag]. Lag convention: when x_j is x_i delayed by d
/// samples, the peak sits at lag -d.
struct GccCurve {
  std::vector<double> values;
  int max_lag = 0;
  int interp = 1;

  double lag_of(std::size_t i) const {
    return static_cast<double>(i) / interp - max_lag;
  }
  /// Linear interpolation; lags outside the range clamp to the ends.
  double at_lag(double lag) const;
  std::size_t peak_index() const;
};

GccCurve gcc_phat_pair(std::span<const double> x_i, std::span<const double> x_j, int max_lag,
                       const GccOptions& opt = {});

struct GccConfig {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::shared_ptr<const DirectionGrid> grid;
  GccOptions options;
  double speed_of_sound = 343.0;
};

/// `count` microphones chosen by farthest-point sampling starting at mic 0.
std::vector<std::size_t> spread_mic_subset(const ArrayConfig& arr, std::size_t count);

/// All pairs of spread_mic_subset(arr, mic_count) and the given grid.
GccConfig default_gcc_config(const ArrayConfig& arr, std::shared_ptr<const DirectionGrid> grid,
                             std::size_t mic_count = 8, double fs = 16000.0,
                             double f_low = 500.0, double f_high = 0.0);

/// Microphones referenced by the pair list, ascending.
std::vector<std::size_t> mics_in_pairs(const GccConfig& cfg);

struct SrpResult {
  Direction direction;
  std::size_t index = 0;
  double score = 0.0;
};

/// Sums each pair's correlation at the far-field TDOA for every grid
/// direction and returns the maximizer (lowest index on ties). Throws
/// ConfigurationError when the pair baselines do not span 3-D.
SrpResult srp_doa(const MicSignals& sig, const ArrayConfig& arr, const GccConfig& cfg);

}  // namespace sfdoa
