#include "sfdoa/sphharm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfdoa/errors.hpp"

namespace sfdoa {

namespace {

// Orthonormalized associated Legendre functions Pbar_n^m(cos theta) for
// 0 <= m <= n <= order, Condon-Shortley phase included. Stored at sh_index(n, m).
void legendre_table(int order, double theta, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(sh_count(order)), 0.0);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= order; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    out[sh_index(m, m)] = pmm;
    if (m == order) break;
    double p_prev = pmm;
    double p_curr = std::sqrt(2.0 * m + 3.0) * x * pmm;
    out[sh_index(m + 1, m)] = p_curr;
    for (int n = m + 2; n <= order; ++n) {
      const double nn = n, mm = m;
      const double a = std::sqrt((4.0 * nn * nn - 1.0) / (nn * nn - mm * mm));
      const double b = std::sqrt(((nn - 1.0) * (nn - 1.0) - mm * mm) /
                                 (4.0 * (nn - 1.0) * (nn - 1.0) - 1.0));
      const double p_next = a * (x * p_curr - b * p_prev);
      out[sh_index(n, m)] = p_next;
      p_prev = p_curr;
      p_curr = p_next;
    }
  }
}

void fill_sh_row(const Direction& dir, int order, std::vector<double>& legendre,
                 cdouble* row, Eigen::Index stride) {
  legendre_table(order, dir.theta, legendre);
  for (int n = 0; n <= order; ++n) {
    row[sh_index(n, 0) * stride] = legendre[sh_index(n, 0)];
    for (int m = 1; m <= n; ++m) {
      const cdouble e = std::polar(1.0, m * dir.phi);
      const cdouble pos = legendre[sh_index(n, m)] * e;
      row[sh_index(n, m) * stride] = pos;
      // Y_n^{-m} = (-1)^m conj(Y_n^m)
      row[sh_index(n, -m) * stride] = ((m % 2) ? -1.0 : 1.0) * std::conj(pos);
    }
  }
}

}  // namespace

Eigen::Vector3d Direction::unit_vector() const {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

Direction Direction::from_vector(const Eigen::Vector3d& v) {
  const double r = v.norm();
  if (!(r > 0.0)) throw ArgumentError("direction from zero vector");
  const double z = std::clamp(v.z() / r, -1.0, 1.0);
  return {std::acos(z), wrap_two_pi(std::atan2(v.y(), v.x()))};
}

double wrap_two_pi(double angle) {
  double w = std::fmod(angle, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  if (w >= 2.0 * kPi) w = 0.0;
  return w;
}

Direction make_direction(double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi))
    throw ArgumentError("direction angles must be finite");
  if (theta < 0.0 || theta > kPi)
    throw ArgumentError("theta outside [0, pi]: " + std::to_string(theta));
  return {theta, wrap_two_pi(phi)};
}

double angle_between(const Direction& a, const Direction& b) {
  const double c = std::clamp(a.unit_vector().dot(b.unit_vector()), -1.0, 1.0);
  return std::acos(c);
}

cdouble sh_eval(int n, int m, const Direction& dir) {
  if (n < 0 || std::abs(m) > n)
    throw ArgumentError("invalid spherical harmonic (n, m) = (" + std::to_string(n) + ", " +
                        std::to_string(m) + ")");
  std::vector<double> legendre;
  legendre_table(n, dir.theta, legendre);
  const cdouble pos = legendre[sh_index(n, std::abs(m))] * std::polar(1.0, std::abs(m) * dir.phi);
  if (m >= 0) return pos;
  return ((m % 2) ? -1.0 : 1.0) * std::conj(pos);
}

CVector sh_vector(const Direction& dir, int order) {
  if (order < 0) throw ArgumentError("negative spherical harmonic order");
  CVector y(sh_count(order));
  std::vector<double> legendre;
  fill_sh_row(dir, order, legendre, y.data(), 1);
  return y;
}

CMatrix sh_matrix(std::span<const Direction> dirs, int order) {
  if (order < 0) throw ArgumentError("negative spherical harmonic order");
  if (dirs.empty()) throw ArgumentError("sh_matrix needs at least one direction");
  CMatrix y(static_cast<Eigen::Index>(dirs.size()), sh_count(order));
  std::vector<double> legendre;
  for (std::size_t q = 0; q < dirs.size(); ++q) {
    fill_sh_row(dirs[q], order, legendre, &y(static_cast<Eigen::Index>(q), 0), y.outerStride());
  }
  return y;
}

cdouble radial_open_sphere(int n, double kr) {
  if (n < 0) throw ArgumentError("negative radial order");
  if (kr < 0.0) throw ArgumentError("kr must be non-negative");
  static const cdouble kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const double jn = std::sph_bessel(static_cast<unsigned>(n), kr);
  return 4.0 * kPi * kIPow[n % 4] * jn;
}

CMatrix pseudo_inverse(const CMatrix& m) {
  if (m.size() == 0) throw ArgumentError("pseudo_inverse of empty matrix");
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || smin < 1e-10 * smax || sv.size() < m.cols())
    throw NumericalRankError("pseudo_inverse: matrix is numerically rank deficient");
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
}

HermitianEig hermitian_eig(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ArgumentError("hermitian_eig needs a non-empty square matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale)) throw ArgumentError("hermitian_eig: matrix is not Hermitian");
  const CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw EstimationError("hermitian_eig did not converge");
  const Eigen::Index n = m.rows();
  HermitianEig out{Eigen::VectorXd(n), CMatrix(n, n)};
  // Eigen returns ascending order.
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

DirectionGrid::DirectionGrid(std::vector<Direction> dirs, double resolution_deg)
    : dirs_(std::move(dirs)), resolution_deg_(resolution_deg) {
  units_.resize(3, static_cast<Eigen::Index>(dirs_.size()));
  for (std::size_t i = 0; i < dirs_.size(); ++i) units_.col(static_cast<Eigen::Index>(i)) = dirs_[i].unit_vector();
  z_descending_ = true;
  for (Eigen::Index i = 1; i < units_.cols(); ++i) {
    if (!(units_(2, i) < units_(2, i - 1))) {
      z_descending_ = false;
      break;
    }
  }
}

std::vector<std::size_t> DirectionGrid::within(const Eigen::Vector3d& u, double radius) const {
  std::vector<std::size_t> out;
  const double cos_r = std::cos(radius);
  const Eigen::Index count = units_.cols();
  Eigen::Index begin = 0, end = count;
  if (z_descending_ && radius < kPi) {
    const double theta0 = std::acos(std::clamp(u.z(), -1.0, 1.0));
    const double z_hi = std::cos(std::max(0.0, theta0 - radius)) + 1e-12;
    const double z_lo = std::cos(std::min(kPi, theta0 + radius)) - 1e-12;
    // z is strictly decreasing with the index
    Eigen::Index lo = 0, hi = count;
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (units_(2, mid) > z_hi) lo = mid + 1; else hi = mid;
    }
    begin = lo;
    hi = count;
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (units_(2, mid) >= z_lo) lo = mid + 1; else hi = mid;
    }
    end = lo;
  }
  for (Eigen::Index i = begin; i < end; ++i) {
    if (units_.col(i).dot(u) >= cos_r) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

std::size_t DirectionGrid::nearest(const Direction& dir) const {
  if (dirs_.empty()) throw ArgumentError("nearest on empty grid");
  const Eigen::Vector3d u = dir.unit_vector();
  Eigen::Index best = 0;
  (units_.transpose() * u).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

DirectionGrid fibonacci_grid(std::size_t count) {
  if (count == 0) throw ArgumentError("empty Fibonacci grid");
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Direction> dirs;
  dirs.reserve(count);
  const double m = static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / m;
    dirs.push_back({std::acos(z), wrap_two_pi(golden * static_cast<double>(i))});
  }
  const double res = std::sqrt(4.0 * kPi / m) * 180.0 / kPi;
  return DirectionGrid(std::move(dirs), res);
}

DirectionGrid direction_grid(double resolution_deg) {
  if (!(resolution_deg >= 0.1 && resolution_deg <= 10.0))
    throw ArgumentError("grid resolution must lie in [0.1, 10] degrees");
  const double res = resolution_deg * kPi / 180.0;
  const auto count = static_cast<std::size_t>(std::llround(4.0 * kPi / (res * res)));
  DirectionGrid g = fibonacci_grid(count);
  return DirectionGrid(g.directions(), resolution_deg);
}

}  // namespace sfdoa
