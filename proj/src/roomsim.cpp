#include "sfdoa/roomsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "sfdoa/errors.hpp"
#include "sfdoa/sphharm.hpp"

namespace sfdoa {

namespace {

constexpr int kHalfTaps = 16;
constexpr int kTaps = 2 * kHalfTaps;
constexpr int kPhases = 1024;

// Windowed-sinc kernel sampled at kPhases + 1 fractional offsets. Row p holds
// the taps for a delay fraction f = p / kPhases at offsets t = n - f with
// n = -kHalfTaps + 1 .. kHalfTaps.
struct FractionalDelayTable {
  std::vector<double> taps;

  FractionalDelayTable() : taps(static_cast<std::size_t>((kPhases + 1) * kTaps)) {
    for (int p = 0; p <= kPhases; ++p) {
      const double f = static_cast<double>(p) / kPhases;
      for (int j = 0; j < kTaps; ++j) {
        const double t = static_cast<double>(j - kHalfTaps + 1) - f;
        double v = 0.0;
        if (std::abs(t) < kHalfTaps) {
          const double sinc = (t == 0.0) ? 1.0 : std::sin(kPi * t) / (kPi * t);
          v = sinc * 0.5 * (1.0 + std::cos(kPi * t / kHalfTaps));
        }
        taps[static_cast<std::size_t>(p * kTaps + j)] = v;
      }
    }
  }
};

const FractionalDelayTable& delay_table() {
  static const FractionalDelayTable table;
  return table;
}

void add_arrival(std::vector<double>& out, double delay, double amp) {
  const auto& tab = delay_table().taps;
  const double base = std::floor(delay);
  const double pos = (delay - base) * kPhases;
  const int p = std::min(static_cast<int>(pos), kPhases - 1);
  const double w = pos - p;
  const double* a = &tab[static_cast<std::size_t>(p * kTaps)];
  const double* b = a + kTaps;
  const long start = static_cast<long>(base) - kHalfTaps + 1;
  const long n = static_cast<long>(out.size());
  for (int j = 0; j < kTaps; ++j) {
    const long idx = start + j;
    if (idx < 0 || idx >= n) continue;
    out[static_cast<std::size_t>(idx)] += amp * ((1.0 - w) * a[j] + w * b[j]);
  }
}

struct AxisImage {
  double offset;  // image coordinate minus receiver coordinate
  int reflections;
};

std::vector<AxisImage> axis_images(double src, double rcv, double length, double max_dist) {
  std::vector<AxisImage> out;
  const int n_max = static_cast<int>(std::ceil(max_dist / (2.0 * length))) + 1;
  for (int q = 0; q <= 1; ++q) {
    for (int n = -n_max; n <= n_max; ++n) {
      const double x = (1.0 - 2.0 * q) * src + 2.0 * n * length;
      const double d = x - rcv;
      if (std::abs(d) > max_dist) continue;
      out.push_back({d, std::abs(n - q) + std::abs(n)});
    }
  }
  return out;
}

}  // namespace

void RoomConfig::validate() const {
  if (!(dimensions.minCoeff() > 0.0)) throw ArgumentError("room dimensions must be positive");
  if (!(beta >= 0.0 && beta < 1.0)) throw ArgumentError("reflection coefficient must lie in [0, 1)");
  if (!(fs > 0.0)) throw ArgumentError("sample rate must be positive");
  if (!(speed_of_sound > 0.0)) throw ArgumentError("speed of sound must be positive");
}

double RoomConfig::volume() const { return dimensions.prod(); }

double RoomConfig::surface_area() const {
  const auto& d = dimensions;
  return 2.0 * (d.x() * d.y() + d.x() * d.z() + d.y() * d.z());
}

bool RoomConfig::contains(const Eigen::Vector3d& p) const {
  return (p.array() > 0.0).all() && (p.array() < dimensions.array()).all();
}

BetaFromT60 t60_to_beta(double t60, const RoomConfig& room) {
  if (!(t60 >= 0.0)) throw ArgumentError("t60 must be non-negative");
  if (!(room.dimensions.minCoeff() > 0.0)) throw ArgumentError("room dimensions must be positive");
  if (t60 == 0.0) return {0.0, false};
  const double absorption = 0.1611 * room.volume() / (room.surface_area() * t60);
  if (absorption >= 1.0) return {0.0, true};
  return {std::sqrt(1.0 - absorption), false};
}

ImpulseResponse simulate_rir(const RoomConfig& room, const Eigen::Vector3d& src,
                             const Eigen::Vector3d& rcv, double duration) {
  room.validate();
  if (!room.contains(src) || !room.contains(rcv))
    throw ArgumentError("source and receiver must lie strictly inside the room");
  if ((src - rcv).norm() <= 0.0) throw ArgumentError("source and receiver coincide");
  if (!(duration > 0.0)) throw ArgumentError("duration must be positive");

  ImpulseResponse ir;
  ir.fs = room.fs;
  ir.source = src;
  ir.receiver = rcv;
  const auto length = static_cast<std::size_t>(std::ceil(duration * room.fs));
  const double direct_delay = (src - rcv).norm() / room.speed_of_sound * room.fs;
  ir.samples.assign(std::max(length, static_cast<std::size_t>(std::ceil(direct_delay)) + 1), 0.0);

  const double max_delay = static_cast<double>(ir.samples.size()) + kHalfTaps;
  const double max_dist = max_delay / room.fs * room.speed_of_sound;
  const double max_dist2 = max_dist * max_dist;
  const auto xs = axis_images(src.x(), rcv.x(), room.dimensions.x(), max_dist);
  const auto ys = axis_images(src.y(), rcv.y(), room.dimensions.y(), max_dist);
  const auto zs = axis_images(src.z(), rcv.z(), room.dimensions.z(), max_dist);

  int max_refl = 0;
  for (const auto* axis : {&xs, &ys, &zs}) {
    int m = 0;
    for (const auto& a : *axis) m = std::max(m, a.reflections);
    max_refl += m;
  }
  std::vector<double> beta_pow(static_cast<std::size_t>(max_refl) + 1, 0.0);
  beta_pow[0] = 1.0;
  for (std::size_t k = 1; k < beta_pow.size(); ++k) beta_pow[k] = beta_pow[k - 1] * room.beta;

  const double samples_per_meter = room.fs / room.speed_of_sound;
  for (const auto& ix : xs) {
    const double dx2 = ix.offset * ix.offset;
    for (const auto& iy : ys) {
      const double dxy2 = dx2 + iy.offset * iy.offset;
      if (dxy2 > max_dist2) continue;
      for (const auto& iz : zs) {
        const double d2 = dxy2 + iz.offset * iz.offset;
        if (d2 > max_dist2) continue;
        const double amp_refl = beta_pow[static_cast<std::size_t>(ix.reflections + iy.reflections + iz.reflections)];
        if (amp_refl == 0.0) continue;
        const double d = std::sqrt(d2);
        add_arrival(ir.samples, d * samples_per_meter, amp_refl / (4.0 * kPi * d));
      }
    }
  }
  return ir;
}

std::vector<ImpulseResponse> simulate_rirs(const RoomConfig& room, const Eigen::Vector3d& src,
                                           std::span<const Eigen::Vector3d> receivers,
                                           double duration) {
  std::vector<ImpulseResponse> out;
  out.reserve(receivers.size());
  for (const auto& r : receivers) out.push_back(simulate_rir(room, src, r, duration));
  // Common length so the array channels line up.
  std::size_t len = 0;
  for (const auto& ir : out) len = std::max(len, ir.samples.size());
  for (auto& ir : out) ir.samples.resize(len, 0.0);
  return out;
}

double estimate_t60_schroeder(const ImpulseResponse& ir) {
  if (!(ir.fs > 0.0)) throw ArgumentError("impulse response without sample rate");
  const std::size_t n = ir.samples.size();
  std::vector<double> edc(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) edc[i] = edc[i + 1] + ir.samples[i] * ir.samples[i];
  const double total = edc[0];
  if (!(total > 0.0)) throw EstimationError("impulse response has no energy");

  auto level_db = [&](std::size_t i) {
    return edc[i] > 0.0 ? 10.0 * std::log10(edc[i] / total) : -std::numeric_limits<double>::infinity();
  };
  std::size_t i5 = n, i35 = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = level_db(i);
    if (i5 == n && l <= -5.0) i5 = i;
    if (l <= -35.0) {
      i35 = i;
      break;
    }
  }
  if (i5 >= n || i35 >= n || i35 < i5 + 2)
    throw EstimationError("impulse response lacks a 30 dB decay span for a Schroeder fit");

  // Least-squares line through (t, level) over the -5..-35 dB span.
  double st = 0, sl = 0, stt = 0, stl = 0;
  std::size_t count = 0;
  for (std::size_t i = i5; i < i35; ++i) {
    const double l = level_db(i);
    if (!std::isfinite(l)) continue;
    const double t = static_cast<double>(i) / ir.fs;
    st += t;
    sl += l;
    stt += t * t;
    stl += t * l;
    ++count;
  }
  const double c = static_cast<double>(count);
  const double denom = c * stt - st * st;
  if (count < 2 || !(denom > 0.0)) throw EstimationError("degenerate Schroeder fit");
  const double slope = (c * stl - st * sl) / denom;  // dB per second
  if (!(slope < 0.0)) throw EstimationError("Schroeder curve does not decay");
  return -60.0 / slope;
}

CalibratedBeta calibrate_beta(double t60, const RoomConfig& room, const Eigen::Vector3d& src,
                              const Eigen::Vector3d& rcv, double rel_tol) {
  if (!(t60 >= 0.0)) throw ArgumentError("t60 must be non-negative");
  if (!(rel_tol > 0.0)) throw ArgumentError("tolerance must be positive");
  if (t60 == 0.0) return {};
  RoomConfig r = room;
  // Long enough that -35 dB is reached for any candidate near the target.
  const double duration = std::max(0.3, 2.0 * t60);
  auto measure = [&](double beta) {
    r.beta = beta;
    try {
      return estimate_t60_schroeder(simulate_rir(r, src, rcv, duration));
    } catch (const EstimationError&) {
      // Too little decay inside the window: the candidate is too reverberant.
      return std::numeric_limits<double>::infinity();
    }
  };
  double lo = 0.0;
  double hi = 0.999;
  CalibratedBeta out;
  // Start from the Sabine value, which brackets from above for this model.
  double beta = std::max(0.05, t60_to_beta(t60, room).beta);
  for (out.iterations = 1; out.iterations <= 60; ++out.iterations) {
    const double est = measure(beta);
    if (std::isfinite(est) && std::abs(est - t60) <= rel_tol * t60) {
      out.beta = beta;
      out.measured_t60 = est;
      return out;
    }
    if (est > t60)
      hi = beta;
    else
      lo = beta;
    beta = 0.5 * (lo + hi);
    if (hi - lo < 1e-9) break;
  }
  throw EstimationError("could not calibrate the reflection coefficient for T60 = " + std::to_string(t60));
}

double critical_distance(const RoomConfig& room, double t60) {
  if (!(t60 > 0.0)) throw ArgumentError("critical distance needs t60 > 0");
  return 0.1 * std::sqrt(room.volume() / (kPi * t60));
}

namespace {

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated RIR file");
  return v;
}

}  // namespace

void write_rir_binary(const std::string& path, const ImpulseResponse& ir) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("SFIR", 4);
  put(os, ir.fs);
  put(os, static_cast<std::uint64_t>(ir.samples.size()));
  for (int i = 0; i < 3; ++i) put(os, ir.source(i));
  for (int i = 0; i < 3; ++i) put(os, ir.receiver(i));
  os.write(reinterpret_cast<const char*>(ir.samples.data()),
           static_cast<std::streamsize>(ir.samples.size() * sizeof(double)));
  if (!os) throw IoError("failed writing " + path);
}

ImpulseResponse read_rir_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SFIR", 4) != 0) throw IoError(path + " is not an RIR dump");
  ImpulseResponse ir;
  ir.fs = get<double>(is);
  const auto n = get<std::uint64_t>(is);
  for (int i = 0; i < 3; ++i) ir.source(i) = get<double>(is);
  for (int i = 0; i < 3; ++i) ir.receiver(i) = get<double>(is);
  ir.samples.resize(n);
  is.read(reinterpret_cast<char*>(ir.samples.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw IoError("truncated RIR file");
  return ir;
}

}  // namespace sfdoa
