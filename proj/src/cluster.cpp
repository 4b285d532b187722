#include "sfdoa/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sfdoa/errors.hpp"

namespace sfdoa {

namespace {

using Point = Eigen::Vector2d;

std::vector<Point> unwrapped_sorted(std::span<const Direction> samples, double center) {
  std::vector<Point> pts;
  pts.reserve(samples.size());
  for (const auto& d : samples) pts.emplace_back(d.theta, unwrap_around(d.phi, center));
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a(0) != b(0) ? a(0) < b(0) : a(1) < b(1);
  });
  return pts;
}

double log_gauss(const Point& x, const GmmComponent& c) {
  double s = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double diff = x(d) - c.mean(d);
    s += diff * diff / c.variance(d) + std::log(2.0 * kPi * c.variance(d));
  }
  return -0.5 * s;
}

// Per-component log(w_k N_k(x)); returns the log of their sum.
double joint_logs(const Point& x, const std::vector<GmmComponent>& comps, std::vector<double>& out) {
  out.resize(comps.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    out[k] = comps[k].weight > 0.0 ? std::log(comps[k].weight) + log_gauss(x, comps[k])
                                   : -std::numeric_limits<double>::infinity();
    mx = std::max(mx, out[k]);
  }
  double s = 0.0;
  for (double v : out) s += std::exp(v - mx);
  return mx + std::log(s);
}

Direction to_direction(const Point& p) {
  return make_direction(std::clamp(p(0), 0.0, kPi), wrap_two_pi(p(1)));
}

}  // namespace

double unwrap_around(double phi, double center) {
  double d = std::remainder(phi - center, 2.0 * kPi);  // [-pi, pi]
  if (d <= -kPi) d += 2.0 * kPi;
  return center + d;
}

double circular_mean_phi(std::span<const Direction> samples) {
  double s = 0.0, c = 0.0;
  for (const auto& d : samples) {
    s += std::sin(d.phi);
    c += std::cos(d.phi);
  }
  if (std::hypot(s, c) <= 1e-12 * static_cast<double>(samples.size())) return 0.0;
  return wrap_two_pi(std::atan2(s, c));
}

GmmModel gmm_fit(std::span<const Direction> samples, std::uint64_t seed, const GmmOptions& opt) {
  if (samples.empty()) throw EstimationError("gmm_fit: no samples");
  if (opt.components < 1) throw ArgumentError("gmm_fit: need at least one component");
  GmmModel model;
  model.phi_center = circular_mean_phi(samples);
  const auto pts = unwrapped_sorted(samples, model.phi_center);
  const std::size_t n = pts.size();
  const double floor = opt.variance_floor;

  // Farthest-point seeding; stops early when only duplicates remain.
  std::vector<std::size_t> seeds;
  {
    std::mt19937_64 rng(seed);
    seeds.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    while (seeds.size() < static_cast<std::size_t>(opt.components)) {
      const Point& last = pts[seeds.back()];
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::min(dist[i], (pts[i] - last).squaredNorm());
        if (dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (!(far_d > 0.0)) break;
      seeds.push_back(far);
    }
  }

  Point mean = Point::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(n);
  Point var = Point::Zero();
  for (const auto& p : pts) var += (p - mean).cwiseAbs2();
  var /= static_cast<double>(n);
  var = var.cwiseMax(floor);

  const std::size_t K = seeds.size();
  for (std::size_t s : seeds)
    model.components.push_back({1.0 / static_cast<double>(K), pts[s], var});

  std::vector<double> logs;
  std::vector<double> resp(n * K);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    // E-step
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lse = joint_logs(pts[i], model.components, logs);
      total += lse;
      for (std::size_t k = 0; k < K; ++k) resp[i * K + k] = std::exp(logs[k] - lse);
    }
    model.log_likelihood.push_back(total);
    model.iterations = it + 1;
    if (it > 0 && (total - prev) / static_cast<double>(n) < opt.tolerance) {
      model.converged = true;
      break;
    }
    prev = total;

    // M-step
    for (std::size_t k = 0; k < K; ++k) {
      auto& c = model.components[k];
      double nk = 0.0;
      Point mu = Point::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * K + k];
        mu += resp[i * K + k] * pts[i];
      }
      c.weight = nk / static_cast<double>(n);
      if (!(nk > 0.0)) continue;  // starved component keeps its shape at zero weight
      mu /= nk;
      Point v = Point::Zero();
      for (std::size_t i = 0; i < n; ++i) v += resp[i * K + k] * (pts[i] - mu).cwiseAbs2();
      c.mean = mu;
      c.variance = (v / nk).cwiseMax(floor);
    }
  }
  return model;
}

DoaEstimate dominant_doa(const GmmModel& model, std::span<const Direction> samples) {
  if (model.components.empty()) throw ArgumentError("dominant_doa: empty model");
  std::size_t best = 0;
  for (std::size_t k = 1; k < model.components.size(); ++k)
    if (model.components[k].weight > model.components[best].weight) best = k;

  const auto pts = unwrapped_sorted(samples, model.phi_center);
  std::vector<double> logs;
  Point sum = Point::Zero();
  std::size_t count = 0;
  for (const auto& p : pts) {
    joint_logs(p, model.components, logs);
    const auto arg = static_cast<std::size_t>(std::max_element(logs.begin(), logs.end()) - logs.begin());
    if (arg == best) {
      sum += p;
      ++count;
    }
  }
  DoaEstimate est;
  est.dominant_weight = model.components[best].weight;
  est.support = count;
  est.direction = to_direction(count > 0 ? Point(sum / static_cast<double>(count))
                                         : model.components[best].mean);
  return est;
}

DoaEstimate estimate_doa(std::span<const Direction> samples, bool use_gmm, std::uint64_t seed,
                         const GmmOptions& opt) {
  if (samples.empty()) throw EstimationError("no DoA samples to estimate from");
  if (use_gmm) return dominant_doa(gmm_fit(samples, seed, opt), samples);
  const double center = circular_mean_phi(samples);
  Point sum = Point::Zero();
  for (const auto& p : unwrapped_sorted(samples, center)) sum += p;
  DoaEstimate est;
  est.support = samples.size();
  est.direction = to_direction(sum / static_cast<double>(samples.size()));
  return est;
}

}  // namespace sfdoa
