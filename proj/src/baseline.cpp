#include "sfdoa/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "sfdoa/errors.hpp"
#include "sfdoa/signal.hpp"

namespace sfdoa {

double GccCurve::at_lag(double lag) const {
  if (values.empty()) return 0.0;
  const double pos = (lag + max_lag) * interp;
  if (pos <= 0.0) return values.front();
  const double last = static_cast<double>(values.size() - 1);
  if (pos >= last) return values.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

std::size_t GccCurve::peak_index() const {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

GccCurve gcc_phat_pair(std::span<const double> x_i, std::span<const double> x_j, int max_lag,
                       const GccOptions& opt) {
  if (x_i.size() != x_j.size()) throw ArgumentError("gcc_phat_pair: signal lengths differ");
  if (max_lag < 0 || opt.interp < 1) throw ArgumentError("gcc_phat_pair: bad lag range or interpolation");
  const std::size_t len = x_i.size();
  if (len < 4 * static_cast<std::size_t>(std::max(max_lag, 1)))
    throw ArgumentError("gcc_phat_pair: signals shorter than 4x the lag range");

  const std::size_t frame = std::min(opt.frame, next_pow2(len));
  const std::size_t hop = std::max<std::size_t>(1, std::min(opt.hop, frame));
  const std::size_t half = frame / 2 + 1;
  const auto window = hann_window(frame);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> bi(frame), bj(frame);
  std::vector<cdouble> si, sj;
  std::vector<cdouble> cross(half, cdouble(0.0, 0.0));
  for (std::size_t start = 0;; start += hop) {
    for (std::size_t n = 0; n < frame; ++n) {
      const std::size_t idx = start + n;
      bi[n] = idx < len ? window[n] * x_i[idx] : 0.0;
      bj[n] = idx < len ? window[n] * x_j[idx] : 0.0;
    }
    fft.fwd(si, bi);
    fft.fwd(sj, bj);
    for (std::size_t k = 0; k < half; ++k) cross[k] += si[k] * std::conj(sj[k]);
    if (start + frame >= len) break;
  }

  const double df = opt.fs / static_cast<double>(frame);
  const double f_high = opt.f_high > 0.0 ? opt.f_high : opt.fs / 2.0;
  const std::size_t nfine = frame * static_cast<std::size_t>(opt.interp);
  std::vector<cdouble> weighted(nfine / 2 + 1, cdouble(0.0, 0.0));
  double total = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    const double f = static_cast<double>(k) * df;
    if (f < opt.f_low || f > f_high) continue;
    const double mag = std::abs(cross[k]);
    total += mag;
    weighted[k] = cross[k] / (mag + 1e-12);
  }
  if (!(total > 0.0)) throw DegenerateInputError("gcc_phat_pair: zero cross-spectrum in band");

  std::vector<double> r;
  fft.inv(r, weighted, static_cast<Eigen::Index>(nfine));
  GccCurve out;
  out.max_lag = max_lag;
  out.interp = opt.interp;
  const long span = static_cast<long>(max_lag) * opt.interp;
  out.values.resize(static_cast<std::size_t>(2 * span + 1));
  for (long l = -span; l <= span; ++l) {
    const long idx = ((l % static_cast<long>(nfine)) + static_cast<long>(nfine)) % static_cast<long>(nfine);
    out.values[static_cast<std::size_t>(l + span)] = r[static_cast<std::size_t>(idx)];
  }
  return out;
}

std::vector<std::size_t> spread_mic_subset(const ArrayConfig& arr, std::size_t count) {
  const auto pos = arr.offsets();
  const std::size_t q = arr.mic_count();
  if (count == 0 || count > q) throw ConfigurationError("GCC microphone subset size out of range");
  std::vector<std::size_t> chosen{0};
  std::vector<double> dist(q, std::numeric_limits<double>::infinity());
  while (chosen.size() < count) {
    const Eigen::Vector3d last = pos.col(static_cast<Eigen::Index>(chosen.back()));
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t m = 0; m < q; ++m) {
      dist[m] = std::min(dist[m], (pos.col(static_cast<Eigen::Index>(m)) - last).squaredNorm());
      if (dist[m] > far_d) {
        far_d = dist[m];
        far = m;
      }
    }
    chosen.push_back(far);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

GccConfig default_gcc_config(const ArrayConfig& arr, std::shared_ptr<const DirectionGrid> grid,
                             std::size_t mic_count, double fs, double f_low, double f_high) {
  GccConfig cfg;
  const auto mics = spread_mic_subset(arr, mic_count);
  for (std::size_t a = 0; a < mics.size(); ++a)
    for (std::size_t b = a + 1; b < mics.size(); ++b) cfg.pairs.emplace_back(mics[a], mics[b]);
  cfg.grid = std::move(grid);
  cfg.options.fs = fs;
  cfg.options.f_low = f_low;
  cfg.options.f_high = f_high;
  return cfg;
}

std::vector<std::size_t> mics_in_pairs(const GccConfig& cfg) {
  std::vector<std::size_t> out;
  for (const auto& [i, j] : cfg.pairs) {
    out.push_back(i);
    out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SrpResult srp_doa(const MicSignals& sig, const ArrayConfig& arr, const GccConfig& cfg) {
  if (!cfg.grid || cfg.grid->size() == 0) throw ConfigurationError("srp_doa: no search grid");
  if (cfg.pairs.empty()) throw ConfigurationError("srp_doa: no microphone pairs");
  const auto pos = arr.offsets();
  const auto npairs = static_cast<Eigen::Index>(cfg.pairs.size());
  Eigen::Matrix3Xd baselines(3, npairs);
  for (Eigen::Index p = 0; p < npairs; ++p) {
    const auto [i, j] = cfg.pairs[static_cast<std::size_t>(p)];
    if (i >= arr.mic_count() || j >= arr.mic_count() || i >= sig.count() || j >= sig.count() || i == j)
      throw ConfigurationError("srp_doa: pair references an invalid microphone");
    baselines.col(p) = pos.col(static_cast<Eigen::Index>(j)) - pos.col(static_cast<Eigen::Index>(i));
  }
  const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(baselines);
  const auto sv = svd.singularValues();
  if (sv.size() < 3 || !(sv(2) > 1e-6 * sv(0)))
    throw ConfigurationError("srp_doa: microphone pairs do not span three dimensions");

  const double fs = cfg.options.fs;
  if (std::abs(sig.fs - fs) > 1e-9) throw ArgumentError("srp_doa: sample rate differs from the GCC options");
  const double max_base = baselines.colwise().norm().maxCoeff();
  const int max_lag = static_cast<int>(std::ceil(max_base / cfg.speed_of_sound * fs)) + 1;

  std::vector<GccCurve> curves;
  curves.reserve(cfg.pairs.size());
  for (const auto& [i, j] : cfg.pairs) curves.push_back(gcc_phat_pair(sig.channels[i], sig.channels[j], max_lag, cfg.options));

  // Peak lag for direction u is u . (m_j - m_i) fs / c.
  const Eigen::MatrixXd lags = (baselines.transpose() * cfg.grid->unit_vectors()) * (fs / cfg.speed_of_sound);
  SrpResult best;
  best.score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index g = 0; g < lags.cols(); ++g) {
    double s = 0.0;
    for (Eigen::Index p = 0; p < npairs; ++p) s += curves[static_cast<std::size_t>(p)].at_lag(lags(p, g));
    if (s > best.score) {
      best.score = s;
      best.index = static_cast<std::size_t>(g);
    }
  }
  best.direction = (*cfg.grid)[best.index];
  return best;
}

}  // namespace sfdoa
