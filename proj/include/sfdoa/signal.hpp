#pragma once

// Small DSP helpers shared by the simulation and localization modules.

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace sfdoa {

/// One-sided spectrum (nfft/2 + 1 bins) of `x` zero-padded to `nfft`.
/// Forward convention X_k = sum_n x_n exp(-i 2 pi k n / nfft).
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t nfft);

/// Inverse of rfft (scaled by 1/nfft); returns nfft real samples.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t nfft);

std::size_t next_pow2(std::size_t n);

/// Linear convolution, length a.size() + b.size() - 1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

/// Periodic Hann window of length n (sums to n/2 at 50 % overlap-add).
std::vector<double> hann_window(std::size_t n);

/// Deterministic seed derivation (splitmix64 over the parts).
std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);

/// Speech-like test signal: formant-filtered noise syllables on a ~4 Hz
/// syllabic rhythm with sharp onsets and short pauses. RMS is 0.1.
std::vector<double> synthetic_speech(double duration_s, double fs, std::uint64_t seed);

double mean_power(std::span<const double> x);

}  // namespace sfdoa
