#pragma once

// Spherical-harmonic basis, open-sphere radial functions, direction grids and
// the small dense linear-algebra kernels used by the localization pipeline.
//
// Conventions: orthonormal complex harmonics with the Condon-Shortley phase,
//   Y_n^m(theta, phi) = Pbar_n^m(cos theta) exp(i m phi),
// where theta is the inclination from the +z axis and phi the azimuth.
// Coefficients are stored at the zero-based index n^2 + n + m.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sfdoa {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;

struct Direction {
  double theta = 0.0;  // inclination from zenith, [0, pi]
  double phi = 0.0;    // azimuth, [0, 2 pi)

  Eigen::Vector3d unit_vector() const;
  static Direction from_vector(const Eigen::Vector3d& v);
};

/// Validates theta and wraps phi into [0, 2 pi). Throws ArgumentError when
/// theta is outside [0, pi] or either angle is not finite.
Direction make_direction(double theta, double phi);

double wrap_two_pi(double angle);

/// Great-circle angle between two directions, radians.
double angle_between(const Direction& a, const Direction& b);

constexpr int sh_count(int order) { return (order + 1) * (order + 1); }
constexpr int sh_index(int n, int m) { return n * n + n + m; }

cdouble sh_eval(int n, int m, const Direction& dir);

/// y(dir): all harmonics up to `order` at one direction, length (order+1)^2.
CVector sh_vector(const Direction& dir, int order);

/// Rows are directions, columns (n, m) pairs in sh_index order.
CMatrix sh_matrix(std::span<const Direction> dirs, int order);

/// b_n(kr) = 4 pi i^n j_n(kr) for an open (transparent) sphere.
cdouble radial_open_sphere(int n, double kr);

/// Moore-Penrose pseudo-inverse of a full-column-rank matrix.
/// Throws NumericalRankError when the smallest singular value is below
/// 1e-10 of the largest.
CMatrix pseudo_inverse(const CMatrix& m);

struct HermitianEig {
  Eigen::VectorXd values;  // descending
  CMatrix vectors;         // column k pairs with values[k]
};

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized when
/// it is Hermitian to within 1e-10 (relative to its largest entry);
/// otherwise ArgumentError is thrown.
HermitianEig hermitian_eig(const CMatrix& m);

/// Set of search directions on the sphere.
class DirectionGrid {
 public:
  DirectionGrid() = default;
  DirectionGrid(std::vector<Direction> dirs, double resolution_deg);

  std::size_t size() const { return dirs_.size(); }
  const Direction& operator[](std::size_t i) const { return dirs_[i]; }
  const std::vector<Direction>& directions() const { return dirs_; }
  const Eigen::Matrix3Xd& unit_vectors() const { return units_; }
  double resolution_deg() const { return resolution_deg_; }

  /// Indices (ascending) of grid points within `radius` radians of `u`.
  std::vector<std::size_t> within(const Eigen::Vector3d& u, double radius) const;

  /// Index of the grid point closest to `dir` (lowest index on ties).
  std::size_t nearest(const Direction& dir) const;

 private:
  std::vector<Direction> dirs_;
  Eigen::Matrix3Xd units_;
  double resolution_deg_ = 0.0;
  bool z_descending_ = false;
};

/// Fibonacci-spiral grid with round(4 pi / res^2) points.
/// Requires 0.1 <= resolution_deg <= 10.
DirectionGrid direction_grid(double resolution_deg);

/// Fibonacci-spiral grid with an explicit point count (no range check).
DirectionGrid fibonacci_grid(std::size_t count);

}  // namespace sfdoa
