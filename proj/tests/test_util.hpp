#pragma once

// Shared helpers for the unit tests: random draws and a direct forward model
// of the array that bypasses the room simulator.

#include <cmath>
#include <random>
#include <vector>

#include "sfdoa/arrayproc.hpp"
#include "sfdoa/sphharm.hpp"

namespace testutil {

using sfdoa::cdouble;
using sfdoa::CVector;
using sfdoa::Direction;

inline Direction random_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, 2.0 * sfdoa::kPi);
  return {std::acos(u(rng)), a(rng)};
}

inline CVector random_cvector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cdouble(g(rng), g(rng));
  return v;
}

inline double deg(double rad) { return rad * 180.0 / sfdoa::kPi; }
inline double rad(double deg) { return deg * sfdoa::kPi / 180.0; }

/// Microphone-domain STFT tensor of a single plane wave from `psi`, built
/// through p = Y(Omega) B(k) y*(psi) s with random complex amplitudes s.
inline sfdoa::TimeFreqTensor plane_wave_mic_tensor(const sfdoa::ArrayConfig& arr, const Direction& psi,
                                                   std::size_t frames, double fs, std::size_t fft,
                                                   double c, std::uint64_t seed) {
  const std::size_t bins = fft / 2 + 1;
  sfdoa::TimeFreqTensor tf(frames, bins, arr.mic_count(), 0, {fft, fft / 2}, fs);
  const sfdoa::CMatrix Y = arr.sh_matrix();
  const CVector ystar = sfdoa::sh_vector(psi, arr.order).conjugate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t b = 0; b < bins; ++b) {
    const double kr = 2.0 * sfdoa::kPi * static_cast<double>(b) * fs / static_cast<double>(fft) / c * arr.radius;
    CVector coeff = ystar;
    for (int n = 0; n <= arr.order; ++n)
      for (int m = -n; m <= n; ++m) coeff(sfdoa::sh_index(n, m)) *= sfdoa::radial_open_sphere(n, kr);
    const CVector p = Y * coeff;
    for (std::size_t t = 0; t < frames; ++t) {
      const cdouble s(g(rng), g(rng));
      tf.vec(t, b) = p * s;
    }
  }
  return tf;
}

}  // namespace testutil
