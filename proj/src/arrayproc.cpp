#include "sfdoa/arrayproc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/FFT>

#include "sfdoa/errors.hpp"
#include "sfdoa/signal.hpp"

namespace sfdoa {

// ---------------------------------------------------------------- geometry

void ArrayConfig::validate() const {
  if (order < 0) throw ConfigurationError("array order must be non-negative");
  if (!(radius > 0.0)) throw ConfigurationError("array radius must be positive");
  if (static_cast<std::size_t>(sh_count(order)) > mic_dirs.size())
    throw ConfigurationError("array order too high for the microphone count: (N+1)^2 > Q");
  try {
    (void)pseudo_inverse(sh_matrix());
  } catch (const NumericalRankError&) {
    throw ConfigurationError("microphone layout does not resolve order " + std::to_string(order));
  }
}

CMatrix ArrayConfig::sh_matrix() const { return sfdoa::sh_matrix(mic_dirs, order); }

Eigen::Matrix3Xd ArrayConfig::offsets() const {
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(mic_dirs.size()));
  for (std::size_t q = 0; q < mic_dirs.size(); ++q)
    out.col(static_cast<Eigen::Index>(q)) = radius * mic_dirs[q].unit_vector();
  return out;
}

std::vector<Eigen::Vector3d> ArrayConfig::positions(const Eigen::Vector3d& center) const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(mic_dirs.size());
  for (const auto& d : mic_dirs) out.push_back(center + radius * d.unit_vector());
  return out;
}

ArrayConfig default_array_geometry() {
  const double gr = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> pts;
  // Icosahedron vertices: cyclic permutations of (0, +-1, +-gr).
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      pts.emplace_back(0.0, s1 * 1.0, s2 * gr);
      pts.emplace_back(s1 * 1.0, s2 * gr, 0.0);
      pts.emplace_back(s2 * gr, 0.0, s1 * 1.0);
    }
  // Dual dodecahedron (the icosahedron's face centers): (+-1, +-1, +-1) and
  // cyclic (0, +-gr, +-1/gr).
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) pts.emplace_back(sx, sy, sz);
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      pts.emplace_back(0.0, s1 * gr, s2 / gr);
      pts.emplace_back(s1 * gr, s2 / gr, 0.0);
      pts.emplace_back(s2 / gr, 0.0, s1 * gr);
    }
  ArrayConfig arr;
  arr.radius = 0.042;
  arr.order = 3;
  for (const auto& p : pts) arr.mic_dirs.push_back(Direction::from_vector(p));
  return arr;
}

// ------------------------------------------------------------ time domain

MicSignals synth_mic_signals(std::span<const ImpulseResponse> rirs, std::span<const double> source,
                             double fs) {
  if (rirs.empty()) throw ArgumentError("synth_mic_signals: no impulse responses");
  if (source.empty()) throw ArgumentError("synth_mic_signals: empty source");
  MicSignals out;
  out.fs = fs;
  std::size_t rir_len = 0;
  for (const auto& ir : rirs) {
    if (std::abs(ir.fs - fs) > 1e-9) throw ArgumentError("synth_mic_signals: sample-rate mismatch");
    rir_len = std::max(rir_len, ir.samples.size());
  }
  const std::size_t len = source.size() + rir_len - 1;
  const std::size_t nfft = next_pow2(len);
  const auto src_spec = rfft(source, nfft);
  for (const auto& ir : rirs) {
    auto spec = rfft(ir.samples, nfft);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= src_spec[k];
    auto y = irfft(spec, nfft);
    y.resize(len);
    out.channels.push_back(std::move(y));
  }
  return out;
}

MicSignals add_sensor_noise(const MicSignals& sig, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return sig;
  double power = 0.0;
  for (const auto& c : sig.channels) power += mean_power(c);
  if (!sig.channels.empty()) power /= static_cast<double>(sig.channels.size());
  if (!(power > 0.0)) throw ArgumentError("add_sensor_noise: silent input");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  MicSignals out = sig;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& c : out.channels)
    for (double& v : c) v += gauss(rng);
  return out;
}

// -------------------------------------------------------------------- STFT

TimeFreqTensor::TimeFreqTensor(std::size_t frames, std::size_t bins, std::size_t channels,
                               int bin_offset, StftParams params, double fs)
    : frames_(frames), bins_(bins), channels_(channels), bin_offset_(bin_offset), params_(params), fs_(fs),
      data_(frames * bins * channels, cdouble(0.0, 0.0)) {}

double TimeFreqTensor::bin_frequency(std::size_t local_bin) const {
  return (static_cast<double>(bin_offset_) + static_cast<double>(local_bin)) * fs_ /
         static_cast<double>(params_.fft_size);
}

TimeFreqTensor stft(const MicSignals& sig, const StftParams& params) {
  const std::size_t n = params.fft_size;
  if (n < 2 || params.hop == 0 || params.hop > n) throw ArgumentError("stft: bad frame parameters");
  if (sig.count() == 0 || sig.length() < n) throw ArgumentError("stft: signal shorter than one frame");
  const std::size_t frames = 1 + (sig.length() - n) / params.hop;
  const std::size_t bins = n / 2 + 1;
  TimeFreqTensor tf(frames, bins, sig.count(), 0, params, sig.fs);
  const auto window = hann_window(n);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n);
  std::vector<cdouble> spec;
  for (std::size_t c = 0; c < sig.count(); ++c) {
    const auto& x = sig.channels[c];
    if (x.size() != sig.length()) throw ArgumentError("stft: channel lengths differ");
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t start = t * params.hop;
      for (std::size_t i = 0; i < n; ++i) frame[i] = window[i] * x[start + i];
      fft.fwd(spec, frame);
      for (std::size_t b = 0; b < bins; ++b) tf.at(t, b, c) = spec[b];
    }
  }
  return tf;
}

std::vector<double> istft(const TimeFreqTensor& tf, std::size_t channel, std::size_t length) {
  const std::size_t n = tf.params().fft_size;
  if (tf.bin_offset() != 0 || tf.bins() != n / 2 + 1) throw ArgumentError("istft needs a full one-sided tensor");
  if (channel >= tf.channels()) throw ArgumentError("istft: channel out of range");
  std::vector<double> out(length, 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cdouble> spec(tf.bins());
  std::vector<double> frame;
  for (std::size_t t = 0; t < tf.frames(); ++t) {
    for (std::size_t b = 0; b < tf.bins(); ++b) spec[b] = tf.at(t, b, channel);
    fft.inv(frame, spec, static_cast<Eigen::Index>(n));
    const std::size_t start = t * tf.params().hop;
    for (std::size_t i = 0; i < n && start + i < length; ++i) out[start + i] += frame[i];
  }
  return out;
}

// -------------------------------------------------------------------- band

void BandSelection::validate(std::size_t fft_size) const {
  if (!(low >= 0 && low < high && static_cast<std::size_t>(high) <= fft_size / 2))
    throw ConfigurationError("empty or invalid frequency band [" + std::to_string(low) + ", " +
                             std::to_string(high) + "]");
}

BandSelection default_band(const ArrayConfig& arr, double fs, std::size_t fft_size,
                           double speed_of_sound, double f_low) {
  const double f_high = arr.order * speed_of_sound / (2.0 * kPi * arr.radius);
  const double df = fs / static_cast<double>(fft_size);
  BandSelection band;
  band.low = static_cast<int>(std::ceil(f_low / df - 1e-9));
  band.high = std::min(static_cast<int>(std::floor(f_high / df + 1e-9)), static_cast<int>(fft_size / 2));
  band.validate(fft_size);
  return band;
}

// --------------------------------------------------------------------- PWD

namespace {

constexpr double kKrMargin = 1.1;

cdouble soft_limit(cdouble g, double bound) {
  const double mag = std::abs(g);
  const double knee = 0.5 * bound;
  if (mag <= knee) return g;
  const double x = mag / bound;
  const double k = knee / bound;
  const double y = k + (1.0 - k) * std::tanh((x - k) / (1.0 - k));
  return g * (y * bound / mag);
}

}  // namespace

PlaneWaveDecomposer::PlaneWaveDecomposer(const ArrayConfig& arr, BandSelection band, double fs,
                                         std::size_t fft_size, double speed_of_sound,
                                         double reg_max_gain_db)
    : order_(arr.order), mics_(arr.mic_count()), band_(band) {
  arr.validate();
  band.validate(fft_size);
  const double df = fs / static_cast<double>(fft_size);
  const double kr_max = 2.0 * kPi * band.high * df / speed_of_sound * arr.radius;
  if (kr_max > kKrMargin * arr.order)
    throw ConfigurationError("band exceeds the array operating range kr <= N");

  const std::size_t nb = band.size();
  exact_.assign(nb, std::vector<cdouble>(static_cast<std::size_t>(order_) + 1));
  std::vector<double> mags;
  for (std::size_t b = 0; b < nb; ++b) {
    const double kr = 2.0 * kPi * (band.low + static_cast<double>(b)) * df / speed_of_sound * arr.radius;
    for (int n = 0; n <= order_; ++n) {
      const cdouble bn = radial_open_sphere(n, kr);
      const cdouble g = (std::abs(bn) > 0.0) ? 1.0 / bn : cdouble(std::numeric_limits<double>::infinity(), 0.0);
      exact_[b][static_cast<std::size_t>(n)] = g;
      mags.push_back(std::abs(g));
    }
  }
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2), mags.end());
  double median = mags[mags.size() / 2];
  if (mags.size() % 2 == 0) {
    const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2));
    median = 0.5 * (median + lower);
  }
  gain_bound_ = median * std::pow(10.0, reg_max_gain_db / 20.0);

  reg_ = exact_;
  for (std::size_t b = 0; b < nb; ++b) {
    for (int n = 0; n <= order_; ++n) {
      cdouble& g = reg_[b][static_cast<std::size_t>(n)];
      if (!std::isfinite(std::abs(g))) {
        static const cdouble kIPowInv[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
        g = gain_bound_ * kIPowInv[n % 4];
      } else {
        g = soft_limit(g, gain_bound_);
      }
    }
  }

  const CMatrix pinv = pseudo_inverse(arr.sh_matrix());
  matrices_.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    Eigen::VectorXcd diag(sh_count(order_));
    for (int n = 0; n <= order_; ++n)
      for (int m = -n; m <= n; ++m) diag(sh_index(n, m)) = reg_[b][static_cast<std::size_t>(n)];
    matrices_[b] = diag.asDiagonal() * pinv;
  }
}

cdouble PlaneWaveDecomposer::radial_inverse(int bin, int n) const {
  return reg_.at(static_cast<std::size_t>(bin - band_.low)).at(static_cast<std::size_t>(n));
}

cdouble PlaneWaveDecomposer::radial_inverse_exact(int bin, int n) const {
  return exact_.at(static_cast<std::size_t>(bin - band_.low)).at(static_cast<std::size_t>(n));
}

bool PlaneWaveDecomposer::regularized(int bin, int n) const {
  return radial_inverse(bin, n) != radial_inverse_exact(bin, n);
}

const CMatrix& PlaneWaveDecomposer::bin_matrix(int bin) const {
  return matrices_.at(static_cast<std::size_t>(bin - band_.low));
}

TimeFreqTensor PlaneWaveDecomposer::apply(const TimeFreqTensor& mic_tf) const {
  if (mic_tf.channels() != mics_) throw ArgumentError("pwd: channel count differs from the array");
  if (mic_tf.bin_offset() > band_.low ||
      mic_tf.bin_offset() + static_cast<int>(mic_tf.bins()) <= band_.high)
    throw ArgumentError("pwd: input tensor does not cover the band");
  const std::size_t nb = band_.size();
  const std::size_t frames = mic_tf.frames();
  const auto coeffs = static_cast<std::size_t>(sh_count(order_));
  TimeFreqTensor out(frames, nb, coeffs, band_.low, mic_tf.params(), mic_tf.fs());
  if (frames == 0) return out;
  using Strided = Eigen::Map<const CMatrix, 0, Eigen::OuterStride<>>;
  using StridedOut = Eigen::Map<CMatrix, 0, Eigen::OuterStride<>>;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t src_bin = static_cast<std::size_t>(band_.low - mic_tf.bin_offset()) + b;
    Strided p(&mic_tf.data()[src_bin * mics_], static_cast<Eigen::Index>(mics_),
              static_cast<Eigen::Index>(frames),
              Eigen::OuterStride<>(static_cast<Eigen::Index>(mic_tf.bins() * mics_)));
    StridedOut a(&out.data()[b * coeffs], static_cast<Eigen::Index>(coeffs), static_cast<Eigen::Index>(frames),
                 Eigen::OuterStride<>(static_cast<Eigen::Index>(nb * coeffs)));
    a.noalias() = matrices_[b] * p;
  }
  return out;
}

TimeFreqTensor pwd_transform(const TimeFreqTensor& mic_tf, const ArrayConfig& arr, BandSelection band,
                             double reg_max_gain_db, double speed_of_sound) {
  PlaneWaveDecomposer pwd(arr, band, mic_tf.fs(), mic_tf.params().fft_size, speed_of_sound, reg_max_gain_db);
  return pwd.apply(mic_tf);
}

// ------------------------------------------------------------ diffuse noise

double mean_coefficient_power(const TimeFreqTensor& a) {
  if (a.data().empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : a.data()) s += std::norm(v);
  return s / static_cast<double>(a.data().size());
}

TimeFreqTensor add_diffuse_noise_sh(const TimeFreqTensor& a, double snr_db, std::uint64_t seed) {
  if (a.data().empty()) throw ArgumentError("add_diffuse_noise_sh: empty tensor");
  if (std::isinf(snr_db) && snr_db > 0) return a;
  const double variance = mean_coefficient_power(a) / std::pow(10.0, snr_db / 10.0);
  const double sd = std::sqrt(variance / 2.0);
  TimeFreqTensor out = a;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : out.data()) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v += cdouble(sd * re, sd * im);
  }
  return out;
}

MicSignals diffuse_noise_mic(const ArrayConfig& arr, BandSelection band, const StftParams& params,
                             double fs, double speed_of_sound, std::size_t length,
                             double coeff_variance, std::uint64_t seed,
                             std::span<const std::size_t> mics) {
  band.validate(params.fft_size);
  if (length == 0) throw ArgumentError("diffuse_noise_mic: zero length");
  const std::size_t m_fft = next_pow2(length);
  const std::size_t half = m_fft / 2 + 1;
  const double frame_df = fs / static_cast<double>(params.fft_size);
  const double long_df = fs / static_cast<double>(m_fft);
  // Cover the window leakage of the edge bins.
  const double f_lo = std::max(0.0, (band.low - 3) * frame_df);
  const double f_hi = std::min(fs / 2.0, (band.high + 3) * frame_df);
  const auto k_lo = static_cast<std::size_t>(std::ceil(f_lo / long_df));
  const auto k_hi = std::min(half - 1, static_cast<std::size_t>(std::floor(f_hi / long_df)));

  const auto window = hann_window(params.fft_size);
  double w2 = 0.0;
  for (double w : window) w2 += w * w;
  const double sd = std::sqrt(coeff_variance * static_cast<double>(m_fft) / w2 / 2.0);

  const int coeffs = sh_count(arr.order);
  CMatrix noise(coeffs, static_cast<Eigen::Index>(k_hi - k_lo + 1));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index k = 0; k < noise.cols(); ++k) {
    const double kr = 2.0 * kPi * static_cast<double>(k_lo + static_cast<std::size_t>(k)) * long_df /
                      speed_of_sound * arr.radius;
    for (int n = 0; n <= arr.order; ++n) {
      const cdouble bn = radial_open_sphere(n, kr);
      for (int m = -n; m <= n; ++m) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        noise(sh_index(n, m), k) = bn * cdouble(sd * re, sd * im);
      }
    }
  }

  const CMatrix y = arr.sh_matrix();
  std::vector<std::size_t> chosen(mics.begin(), mics.end());
  if (chosen.empty())
    for (std::size_t q = 0; q < arr.mic_count(); ++q) chosen.push_back(q);

  MicSignals out;
  out.fs = fs;
  out.channels.assign(arr.mic_count(), {});
  std::vector<cdouble> spec(half);
  for (std::size_t q : chosen) {
    if (q >= arr.mic_count()) throw ArgumentError("diffuse_noise_mic: microphone index out of range");
    std::fill(spec.begin(), spec.end(), cdouble(0.0, 0.0));
    const Eigen::RowVectorXcd mixed = y.row(static_cast<Eigen::Index>(q)) * noise;
    for (Eigen::Index k = 0; k < mixed.size(); ++k) spec[k_lo + static_cast<std::size_t>(k)] = mixed(k);
    auto x = irfft(spec, m_fft);
    x.resize(length);
    out.channels[q] = std::move(x);
  }
  return out;
}

}  // namespace sfdoa
