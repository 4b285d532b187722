#pragma once

// Spherical-array signal chain: microphone synthesis, noise injection, STFT
// and plane-wave decomposition into spherical-harmonic coefficients.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sfdoa/roomsim.hpp"
#include "sfdoa/sphharm.hpp"

namespace sfdoa {

/// Passing this as an SNR disables the corresponding noise source.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct ArrayConfig {
  std::vector<Direction> mic_dirs;
  double radius = 0.042;  // meters, open sphere
  int order = 3;

  std::size_t mic_count() const { return mic_dirs.size(); }
  /// Requires (N+1)^2 <= Q and a full-column-rank Y(Omega).
  void validate() const;
  CMatrix sh_matrix() const;
  /// Microphone positions relative to the array center, one per column.
  Eigen::Matrix3Xd offsets() const;
  std::vector<Eigen::Vector3d> positions(const Eigen::Vector3d& center) const;
};

/// 32 microphones on the pentakis-dodecahedron vertices (12 icosahedron
/// plus 20 dodecahedron directions), r = 4.2 cm, N = 3.
ArrayConfig default_array_geometry();

struct MicSignals {
  std::vector<std::vector<double>> channels;
  double fs = 0.0;

  std::size_t count() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// Channel q = source convolved with rirs[q] (full length).
MicSignals synth_mic_signals(std::span<const ImpulseResponse> rirs, std::span<const double> source,
                             double fs);

/// Adds independent white Gaussian noise to every channel. SNR is the mean
/// per-channel signal power over the per-channel noise power.
MicSignals add_sensor_noise(const MicSignals& sig, double snr_db, std::uint64_t seed);

struct StftParams {
  std::size_t fft_size = 512;
  std::size_t hop = 256;
};

/// STFT-domain data indexed (frame, bin, channel). `bin_offset` is the
/// absolute FFT bin of local bin 0; a band-limited tensor keeps only the
/// bins it was computed for.
class TimeFreqTensor {
 public:
  TimeFreqTensor() = default;
  TimeFreqTensor(std::size_t frames, std::size_t bins, std::size_t channels, int bin_offset,
                 StftParams params, double fs);

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t channels() const { return channels_; }
  int bin_offset() const { return bin_offset_; }
  const StftParams& params() const { return params_; }
  double fs() const { return fs_; }
  double bin_frequency(std::size_t local_bin) const;

  cdouble& at(std::size_t frame, std::size_t bin, std::size_t ch) { return data_[index(frame, bin) + ch]; }
  cdouble at(std::size_t frame, std::size_t bin, std::size_t ch) const { return data_[index(frame, bin) + ch]; }

  Eigen::Map<CVector> vec(std::size_t frame, std::size_t bin) {
    return {data_.data() + index(frame, bin), static_cast<Eigen::Index>(channels_)};
  }
  Eigen::Map<const CVector> vec(std::size_t frame, std::size_t bin) const {
    return {data_.data() + index(frame, bin), static_cast<Eigen::Index>(channels_)};
  }

  std::vector<cdouble>& data() { return data_; }
  const std::vector<cdouble>& data() const { return data_; }

 private:
  std::size_t index(std::size_t frame, std::size_t bin) const { return (frame * bins_ + bin) * channels_; }

  std::size_t frames_ = 0, bins_ = 0, channels_ = 0;
  int bin_offset_ = 0;
  StftParams params_;
  double fs_ = 0.0;
  std::vector<cdouble> data_;
};

/// One-sided STFT of every channel with a periodic Hann window; frame t
/// covers samples [t * hop, t * hop + fft_size). No padding.
TimeFreqTensor stft(const MicSignals& sig, const StftParams& params = {});

/// Overlap-add resynthesis of one channel. With the Hann window at 50 %
/// overlap the analysis windows sum to one, so no synthesis window is used.
std::vector<double> istft(const TimeFreqTensor& tf, std::size_t channel, std::size_t length);

/// Inclusive FFT-bin range [low, high].
struct BandSelection {
  int low = 0;
  int high = 0;

  std::size_t size() const { return static_cast<std::size_t>(high - low + 1); }
  void validate(std::size_t fft_size) const;
};

/// low = first bin at or above 500 Hz, high = last bin with kr <= N
/// (clamped to Nyquist).
BandSelection default_band(const ArrayConfig& arr, double fs, std::size_t fft_size = 512,
                           double speed_of_sound = 343.0, double f_low = 500.0);

/// Per-bin plane-wave decomposition a = B_reg^{-1}(k) Y(Omega)^+ p.
///
/// The radial inverse 1/b_n(kr) is soft-limited: magnitudes below half of
/// the gain bound pass unchanged, larger ones are compressed smoothly
/// towards the bound. The bound is the median |1/b_n| over the band and all
/// orders, raised by `reg_max_gain_db`.
class PlaneWaveDecomposer {
 public:
  PlaneWaveDecomposer(const ArrayConfig& arr, BandSelection band, double fs,
                      std::size_t fft_size = 512, double speed_of_sound = 343.0,
                      double reg_max_gain_db = 20.0);

  TimeFreqTensor apply(const TimeFreqTensor& mic_tf) const;

  const BandSelection& band() const { return band_; }
  double gain_bound() const { return gain_bound_; }
  /// Regularized radial inverse for absolute FFT bin `bin` and order n.
  cdouble radial_inverse(int bin, int n) const;
  cdouble radial_inverse_exact(int bin, int n) const;
  bool regularized(int bin, int n) const;
  /// (N+1)^2 x Q decomposition matrix for absolute FFT bin `bin`.
  const CMatrix& bin_matrix(int bin) const;

 private:
  int order_;
  std::size_t mics_;
  BandSelection band_;
  double gain_bound_ = 0.0;
  std::vector<std::vector<cdouble>> exact_;  // [local bin][n]
  std::vector<std::vector<cdouble>> reg_;
  std::vector<CMatrix> matrices_;
};

TimeFreqTensor pwd_transform(const TimeFreqTensor& mic_tf, const ArrayConfig& arr,
                             BandSelection band, double reg_max_gain_db = 20.0,
                             double speed_of_sound = 343.0);

/// Mean |a|^2 per coefficient over every bin of the tensor.
double mean_coefficient_power(const TimeFreqTensor& a);

/// Adds i.i.d. circular complex Gaussian noise to every coefficient; the
/// noise variance is mean_coefficient_power(a) / 10^(snr_db / 10).
TimeFreqTensor add_diffuse_noise_sh(const TimeFreqTensor& a, double snr_db, std::uint64_t seed);

/// Microphone-domain counterpart of add_diffuse_noise_sh: white
/// spherical-harmonic noise pushed through Y(Omega) B(k) over the band, so
/// that its STFT-domain decomposition has per-coefficient variance
/// `coeff_variance` (where the regularizer is inactive). Only the
/// microphones in `mics` are synthesized (all when empty); other channels
/// are left empty.
MicSignals diffuse_noise_mic(const ArrayConfig& arr, BandSelection band, const StftParams& params,
                             double fs, double speed_of_sound, std::size_t length,
                             double coeff_variance, std::uint64_t seed,
                             std::span<const std::size_t> mics = {});

}  // namespace sfdoa
