#pragma once

// Diagonal-covariance Gaussian mixture over (theta, phi) DoA samples and the
// dominant-cluster estimate.
//
// Azimuths are unwrapped around their circular mean before fitting, so a
// cluster straddling phi = 0 stays in one piece. Samples are sorted
// internally, which makes every result independent of input order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sfdoa/sphharm.hpp"

namespace sfdoa {

struct GmmComponent {
  double weight = 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();      // (theta, unwrapped phi), radians
  Eigen::Vector2d variance = Eigen::Vector2d::Ones();  // rad^2, floored
};

struct GmmOptions {
  int components = 3;
  int max_iterations = 200;
  double tolerance = 1e-8;         // mean log-likelihood gain per sample
  double variance_floor = 1e-6;    // rad^2
};

struct GmmModel {
  std::vector<GmmComponent> components;
  double phi_center = 0.0;                  // azimuth unwrapping center
  std::vector<double> log_likelihood;       // total log-likelihood per EM iteration
  int iterations = 0;
  bool converged = false;
};

struct DoaEstimate {
  Direction direction;
  std::size_t support = 0;        // samples assigned to the winning cluster
  double dominant_weight = 1.0;
};

/// Unwraps phi into (center - pi, center + pi].
double unwrap_around(double phi, double center);

/// Circular mean of the azimuths (0 when the resultant vanishes).
double circular_mean_phi(std::span<const Direction> samples);

/// EM fit with farthest-point seeding; the first center is drawn from the
/// (sorted) samples with `seed`. Fewer distinct samples than components
/// reduces the component count. Throws EstimationError for an empty set.
GmmModel gmm_fit(std::span<const Direction> samples, std::uint64_t seed, const GmmOptions& opt = {});

/// Highest-weight component (lower index on ties); the estimate is the mean
/// of the samples whose maximum responsibility falls on it, or the
/// component mean if none do.
DoaEstimate dominant_doa(const GmmModel& model, std::span<const Direction> samples);

/// Plain (unwrapped) mean when `use_gmm` is false, GMM dominant cluster
/// otherwise. Throws EstimationError for an empty set.
DoaEstimate estimate_doa(std::span<const Direction> samples, bool use_gmm, std::uint64_t seed,
                         const GmmOptions& opt = {});

}  // namespace sfdoa
