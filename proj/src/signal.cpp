#include "sfdoa/signal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/FFT>

#include "sfdoa/errors.hpp"
#include "sfdoa/sphharm.hpp"

namespace sfdoa {

std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t nfft) {
  if (nfft == 0 || x.size() > nfft) throw ArgumentError("rfft: nfft must cover the input");
  std::vector<double> padded(nfft, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> out;
  fft.fwd(out, padded);
  return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t nfft) {
  if (spectrum.size() != nfft / 2 + 1) throw ArgumentError("irfft: spectrum size mismatch");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  std::vector<double> out;
  fft.inv(out, in, static_cast<Eigen::Index>(nfft));
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t len = a.size() + b.size() - 1;
  const std::size_t nfft = next_pow2(len);
  auto fa = rfft(a, nfft);
  const auto fb = rfft(b, nfft);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto out = irfft(fa, nfft);
  out.resize(len);
  return out;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = splitmix(master);
  for (auto p : parts) h = splitmix(h ^ splitmix(p + 0x632be59bd9b4e019ULL));
  return h;
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

namespace {

// RBJ band-pass biquad (constant 0 dB peak gain).
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double z1 = 0, z2 = 0;

  static Biquad bandpass(double f0, double q, double fs) {
    const double w0 = 2.0 * kPi * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad b;
    b.b0 = alpha / a0;
    b.b1 = 0.0;
    b.b2 = -alpha / a0;
    b.a1 = -2.0 * std::cos(w0) / a0;
    b.a2 = (1.0 - alpha) / a0;
    return b;
  }

  double operator()(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

}  // namespace

std::vector<double> synthetic_speech(double duration_s, double fs, std::uint64_t seed) {
  if (!(duration_s > 0.0) || !(fs > 0.0)) throw ArgumentError("synthetic_speech: bad duration or rate");
  const auto total = static_cast<std::size_t>(std::llround(duration_s * fs));
  std::vector<double> out(total, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::size_t pos = static_cast<std::size_t>(0.05 * fs);
  while (pos < total) {
    // Syllable lengths around 200 ms give the ~4 Hz rhythm together with the gaps.
    const double syl_s = 0.12 + 0.16 * uni(rng);
    const auto len = static_cast<std::size_t>(syl_s * fs);
    const double f1 = 300.0 + 500.0 * uni(rng);
    const double f2 = 900.0 + 1600.0 * uni(rng);
    const double f3 = 2400.0 + 800.0 * uni(rng);
    Biquad r1 = Biquad::bandpass(f1, 4.0, fs);
    Biquad r2 = Biquad::bandpass(f2, 5.0, fs);
    Biquad r3 = Biquad::bandpass(f3, 6.0, fs);
    Biquad air = Biquad::bandpass(1500.0, 0.3, fs);
    const double level = std::pow(10.0, (-6.0 + 12.0 * uni(rng)) / 20.0);
    const double attack = 0.012 * fs;
    const double release = 0.06 * fs;
    for (std::size_t i = 0; i < len && pos + i < total; ++i) {
      const double t = static_cast<double>(i);
      double env = 1.0;
      if (t < attack) env = 0.5 - 0.5 * std::cos(kPi * t / attack);
      const double tail = static_cast<double>(len - i);
      if (tail < release) env *= 0.5 - 0.5 * std::cos(kPi * tail / release);
      const double e = gauss(rng);
      const double voiced = 1.0 * r1(e) + 0.6 * r2(e) + 0.3 * r3(e) + 0.15 * air(e);
      out[pos + i] = level * env * voiced;
    }
    pos += len;
    // Inter-syllable gap, with an occasional phrase pause.
    const double gap_s = (uni(rng) < 0.15) ? 0.25 + 0.2 * uni(rng) : 0.02 + 0.08 * uni(rng);
    pos += static_cast<std::size_t>(gap_s * fs);
  }
  const double rms = std::sqrt(mean_power(out));
  if (rms > 0.0)
    for (double& v : out) v *= 0.1 / rms;
  return out;
}

}  // namespace sfdoa
