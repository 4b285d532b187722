#pragma once

// Image-method room impulse responses for a shoebox room with a uniform wall
// reflection coefficient, plus reverberation-time utilities.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfdoa {

struct RoomConfig {
  Eigen::Vector3d dimensions{8.0, 5.0, 3.0};  // meters
  double beta = 0.0;                          // wall reflection coefficient
  double speed_of_sound = 343.0;              // m/s
  double fs = 16000.0;                        // Hz

  void validate() const;
  double volume() const;
  double surface_area() const;
  bool contains(const Eigen::Vector3d& p) const;  // strictly inside
};

struct ImpulseResponse {
  std::vector<double> samples;
  double fs = 0.0;
  Eigen::Vector3d source = Eigen::Vector3d::Zero();
  Eigen::Vector3d receiver = Eigen::Vector3d::Zero();
};

struct BetaFromT60 {
  double beta = 0.0;
  bool floored = false;  // requested t60 is below what the formula can express
};

/// Sabine inversion: beta = sqrt(max(0, 1 - 0.1611 V / (S t60))).
BetaFromT60 t60_to_beta(double t60, const RoomConfig& room);

struct CalibratedBeta {
  double beta = 0.0;
  double measured_t60 = 0.0;  // Schroeder estimate at `beta` (0 when anechoic)
  int iterations = 0;
};

/// Reflection coefficient whose simulated response (src -> rcv) has a
/// Schroeder T60 within `rel_tol` of `t60`, found by bisection. With a
/// uniform coefficient the image model decays more slowly than the Sabine
/// formula predicts, increasingly so for long reverberation times, so the
/// Sabine value overshoots the requested T60. Throws EstimationError when
/// the target cannot be bracketed.
CalibratedBeta calibrate_beta(double t60, const RoomConfig& room, const Eigen::Vector3d& src,
                              const Eigen::Vector3d& rcv, double rel_tol = 0.005);

/// Allen-Berkeley image expansion. Every image whose delay falls within
/// `duration` contributes beta^k / (4 pi d) at delay d / c, placed with a
/// Hann-windowed sinc fractional delay (32 taps). The response has
/// ceil(duration * fs) samples.
ImpulseResponse simulate_rir(const RoomConfig& room, const Eigen::Vector3d& src,
                             const Eigen::Vector3d& rcv, double duration);

/// One response per receiver, same source.
std::vector<ImpulseResponse> simulate_rirs(const RoomConfig& room, const Eigen::Vector3d& src,
                                           std::span<const Eigen::Vector3d> receivers,
                                           double duration);

/// Schroeder backward integration; line fit over the -5..-35 dB span,
/// extrapolated to -60 dB. Throws EstimationError without 30 dB of decay.
double estimate_t60_schroeder(const ImpulseResponse& ir);

/// d_c = 0.1 sqrt(V / (pi t60)); t60 must be positive.
double critical_distance(const RoomConfig& room, double t60);

/// Raw dump: "SFIR" magic, fs, sample count, source/receiver positions
/// (little-endian doubles / uint64), then float64 samples.
void write_rir_binary(const std::string& path, const ImpulseResponse& ir);
ImpulseResponse read_rir_binary(const std::string& path);

}  // namespace sfdoa
