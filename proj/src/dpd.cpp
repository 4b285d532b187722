#include "sfdoa/dpd.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "sfdoa/errors.hpp"

namespace sfdoa {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kRankOneTol = 1e-12;

}  // namespace

void DpdParams::validate(int order) const {
  const double q = sh_count(order);
  if (variant == DpdVariant::Thr) {
    if (!(th > 1.0)) throw ConfigurationError("THR threshold must exceed 1");
    if (T < 1 || F < 1) throw ConfigurationError("smoothing extents must be at least 1");
  } else if (!(alpha >= 1.0 / q - 1e-12 && alpha <= 1.0)) {
    throw ConfigurationError("directivity fraction must lie in [1/(N+1)^2, 1]");
  }
}

std::optional<CMatrix> spatial_spectrum(const TimeFreqTensor& a, std::size_t tau, std::size_t nu,
                                        int T, int F) {
  if (T < 1 || F < 1) throw ArgumentError("spatial_spectrum: T and F must be positive");
  const auto t_end = tau + static_cast<std::size_t>(T);
  const auto f_end = nu + static_cast<std::size_t>(F);
  if (t_end > a.frames() || f_end > a.bins()) return std::nullopt;
  const auto dim = static_cast<Eigen::Index>(a.channels());
  CMatrix stacked(dim, static_cast<Eigen::Index>(T) * F);
  Eigen::Index col = 0;
  for (std::size_t t = tau; t < t_end; ++t)
    for (std::size_t f = nu; f < f_end; ++f) stacked.col(col++) = a.vec(t, f);
  CMatrix R = stacked * stacked.adjoint();
  R /= static_cast<double>(T * F);
  return R;
}

ThrResult thr_test(const HermitianEig& eig, double th) {
  ThrResult out;
  const auto& v = eig.values;
  if (v.size() == 0 || !(v(0) > 0.0)) return out;  // zero matrix: fail, ratio 0
  const double s2 = v.size() > 1 ? v(1) : 0.0;
  out.ratio = (s2 <= kRankOneTol * v(0)) ? std::numeric_limits<double>::infinity() : v(0) / s2;
  out.pass = out.ratio >= th;
  return out;
}

ThrResult thr_test(const CMatrix& R, double th) { return thr_test(hermitian_eig(R), th); }

SearchHit music_doa(const HermitianEig& eig, const SteeringSearch& search) {
  const Eigen::Index dim = eig.vectors.rows();
  if (dim != sh_count(search.order())) throw ArgumentError("music_doa: matrix size does not match the order");
  const CMatrix noise_h = eig.vectors.rightCols(dim - 1).adjoint();
  // Maximizing 1/d is minimizing d; scoring -d keeps exact nulls finite.
  const auto res = search.maximize([&](const auto& cols) -> Eigen::VectorXd {
    return -(noise_h * cols).colwise().squaredNorm().transpose();
  });
  SearchHit hit;
  hit.index = res.index;
  hit.direction = search.grid()[res.index];
  const double d = -res.score;
  hit.score = d > 0.0 ? 1.0 / d : std::numeric_limits<double>::infinity();
  return hit;
}

SearchHit music_doa(const CMatrix& R, const SteeringSearch& search) {
  return music_doa(hermitian_eig(R), search);
}

DirectivityResult directivity(const Eigen::Ref<const CVector>& a, const SteeringSearch& search) {
  if (a.size() != sh_count(search.order())) throw ArgumentError("directivity: vector length does not match the order");
  const double energy = a.squaredNorm();
  if (!(energy > 0.0)) throw ArgumentError("directivity of a zero vector");
  // y^T(Theta) a = (y*(Theta))^H a
  const auto res = search.maximize([&](const auto& cols) -> Eigen::VectorXd {
    return (cols.adjoint() * a).cwiseAbs2();
  });
  DirectivityResult out;
  out.value = 4.0 * kPi * res.score / energy;
  out.argmax.index = res.index;
  out.argmax.direction = search.grid()[res.index];
  out.argmax.score = res.score;
  return out;
}

bool dir_test(double dir_value, double alpha, int order) {
  return dir_value >= alpha * sh_count(order);
}

DpdResult run_dpd(const TimeFreqTensor& a, const DpdParams& params, const SteeringSearch& search,
                  bool keep_records) {
  if (a.frames() == 0 || a.bins() == 0) throw ConfigurationError("run_dpd: empty band");
  if (static_cast<int>(a.channels()) != sh_count(search.order()))
    throw ArgumentError("run_dpd: coefficient count does not match the search order");
  params.validate(search.order());

  DpdResult out;
  auto& st = out.stats;
  st.bins_total = a.frames() * a.bins();
  const auto t_start = Clock::now();

  for (std::size_t tau = 0; tau < a.frames(); ++tau) {
    for (std::size_t nu = 0; nu < a.bins(); ++nu) {
      const BinIndex bin{tau, a.bin_offset() + static_cast<int>(nu)};
      if (params.variant == DpdVariant::Thr) {
        auto t0 = Clock::now();
        const auto R = spatial_spectrum(a, tau, nu, params.T, params.F);
        if (!R) {
          st.seconds_test += seconds_since(t0);
          continue;
        }
        const HermitianEig eig = hermitian_eig(*R);
        const ThrResult thr = thr_test(eig, params.th);
        st.seconds_test += seconds_since(t0);
        ++st.bins_evaluated;
        std::optional<Direction> doa;
        if (thr.pass) {
          t0 = Clock::now();
          const SearchHit hit = music_doa(eig, search);
          st.seconds_doa += seconds_since(t0);
          doa = hit.direction;
          out.bins.push_back(bin);
          out.samples.push_back({hit.direction, bin});
        }
        if (keep_records) out.records.push_back({bin, thr.ratio, thr.pass, doa});
      } else {
        const auto t0 = Clock::now();
        const auto v = a.vec(tau, nu);
        if (!(v.squaredNorm() > 0.0)) {
          st.seconds_test += seconds_since(t0);
          continue;
        }
        const DirectivityResult d = directivity(v, search);
        const bool pass = dir_test(d.value, params.alpha, search.order());
        st.seconds_test += seconds_since(t0);
        ++st.bins_evaluated;
        if (pass) {
          out.bins.push_back(bin);
          out.samples.push_back({d.argmax.direction, bin});
        }
        if (keep_records) out.records.push_back({bin, d.value, pass, d.argmax.direction});
      }
    }
  }
  st.bins_selected = out.bins.size();
  st.seconds_total = seconds_since(t_start);
  return out;
}

void write_bin_dump(const std::string& path, const std::vector<BinRecord>& records) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.precision(17);
  os << "tau,nu,value,pass,theta,phi\n";
  for (const auto& r : records) {
    os << r.bin.tau << ',' << r.bin.nu << ',';
    if (std::isinf(r.value))
      os << "inf";
    else
      os << r.value;
    os << ',' << (r.pass ? 1 : 0) << ',';
    if (r.direction)
      os << r.direction->theta << ',' << r.direction->phi;
    else
      os << ',';
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path);
}

}  // namespace sfdoa
