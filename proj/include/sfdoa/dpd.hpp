#pragma once

// Direct-path dominance tests over a spherical-harmonic coefficient tensor.
//
// THR: frequency-smoothed spatial spectrum R, eigenvalue-ratio test, MUSIC
// search on the bins that pass.
// DIR: per-bin sound-field directivity; the maximizing direction of the
// directivity search doubles as the DoA sample.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sfdoa/arrayproc.hpp"
#include "sfdoa/grid_search.hpp"
#include "sfdoa/sphharm.hpp"

namespace sfdoa {

enum class DpdVariant { Thr, Dir };

struct DpdParams {
  DpdVariant variant = DpdVariant::Dir;
  double th = 2.0;   // eigenvalue-ratio threshold (THR)
  int T = 2;         // smoothing frames (THR)
  int F = 15;        // smoothing bins (THR)
  double alpha = 0.4;  // directivity fraction (DIR)

  void validate(int order) const;
};

/// Time-frequency bin: frame index and absolute FFT bin.
struct BinIndex {
  std::size_t tau = 0;
  int nu = 0;

  friend bool operator==(const BinIndex&, const BinIndex&) = default;
};

struct DoaSample {
  Direction direction;
  BinIndex bin;
};

/// R = 1/(T F) sum over [tau, tau+T-1] x [nu, nu+F-1] of a a^H, where `nu`
/// is a local bin of the tensor. Returns nothing when the window leaves the
/// tensor.
std::optional<CMatrix> spatial_spectrum(const TimeFreqTensor& a, std::size_t tau, std::size_t nu,
                                        int T, int F);

struct ThrResult {
  bool pass = false;
  double ratio = 0.0;  // sigma_1 / sigma_2; +inf for rank one, 0 for a zero matrix
};

ThrResult thr_test(const HermitianEig& eig, double th);
ThrResult thr_test(const CMatrix& R, double th);

struct SearchHit {
  Direction direction;
  std::size_t index = 0;  // fine-grid index
  double score = 0.0;
};

/// MUSIC with a single-source signal subspace: P = 1 / ||U_n^H y*||^2 over
/// the search grid. `score` of the hit is P (may be +inf for exact data).
SearchHit music_doa(const HermitianEig& eig, const SteeringSearch& search);
SearchHit music_doa(const CMatrix& R, const SteeringSearch& search);

struct DirectivityResult {
  double value = 0.0;  // 4 pi max |y^T a|^2 / a^H a, in [1, (N+1)^2]
  SearchHit argmax;
};

/// Throws ArgumentError for a zero vector.
DirectivityResult directivity(const Eigen::Ref<const CVector>& a, const SteeringSearch& search);

bool dir_test(double dir_value, double alpha, int order);

struct DpdStats {
  std::size_t bins_total = 0;      // anchor bins in the tensor
  std::size_t bins_evaluated = 0;  // anchors whose window fits (THR) / nonzero bins (DIR)
  std::size_t bins_selected = 0;
  double seconds_test = 0.0;  // spatial spectrum + eigen test, or directivity
  double seconds_doa = 0.0;   // MUSIC search (THR only)
  double seconds_total = 0.0;
};

/// One row of the diagnostic dump: test value is the eigenvalue ratio (THR)
/// or the directivity (DIR). The direction is the per-bin DoA when available.
struct BinRecord {
  BinIndex bin;
  double value = 0.0;
  bool pass = false;
  std::optional<Direction> direction;
};

struct DpdResult {
  std::vector<BinIndex> bins;        // selected set, sorted by (tau, nu)
  std::vector<DoaSample> samples;    // one per selected bin, same order
  DpdStats stats;
  std::vector<BinRecord> records;    // filled only when requested
};

/// Runs the chosen test over every anchor bin of a band-limited tensor.
/// THR computes MUSIC only for bins that pass; DIR reuses the directivity
/// argmax. Throws ConfigurationError for an empty tensor.
DpdResult run_dpd(const TimeFreqTensor& a, const DpdParams& params, const SteeringSearch& search,
                  bool keep_records = false);

/// CSV with header tau,nu,value,pass,theta,phi (radians; empty when the bin
/// produced no DoA).
void write_bin_dump(const std::string& path, const std::vector<BinRecord>& records);

}  // namespace sfdoa
