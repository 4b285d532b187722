#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sfdoa/arrayproc.hpp"
#include "sfdoa/errors.hpp"
#include "sfdoa/sphharm.hpp"
#include "test_util.hpp"

using namespace sfdoa;
using testutil::random_direction;

namespace {

// Low-order harmonics written out by hand.
cdouble y_closed_form(int n, int m, double t, double p) {
  const double ct = std::cos(t), st = std::sin(t);
  const cdouble e1 = std::polar(1.0, p), e2 = std::polar(1.0, 2 * p), e3 = std::polar(1.0, 3 * p);
  const double pi = kPi;
  switch (sh_index(n, m)) {
    case 0: return 1.0 / std::sqrt(4 * pi);
    case 1: return std::sqrt(3 / (8 * pi)) * st * std::conj(e1);
    case 2: return std::sqrt(3 / (4 * pi)) * ct;
    case 3: return -std::sqrt(3 / (8 * pi)) * st * e1;
    case 4: return std::sqrt(15 / (32 * pi)) * st * st * std::conj(e2);
    case 5: return std::sqrt(15 / (8 * pi)) * st * ct * std::conj(e1);
    case 6: return std::sqrt(5 / (16 * pi)) * (3 * ct * ct - 1);
    case 7: return -std::sqrt(15 / (8 * pi)) * st * ct * e1;
    case 8: return std::sqrt(15 / (32 * pi)) * st * st * e2;
    case 15: return -std::sqrt(35 / (64 * pi)) * st * st * st * e3;
    case 9: return std::sqrt(35 / (64 * pi)) * st * st * st * std::conj(e3);
    case 12: return std::sqrt(7 / (16 * pi)) * (5 * ct * ct * ct - 3 * ct);
    default: return {std::nan(""), 0.0};
  }
}

// Power series j_n(x) = x^n sum_k (-x^2/2)^k / (k! (2n+2k+1)!!).
double sph_bessel_series(int n, double x) {
  double dfact = 1.0;
  for (int i = 1; i <= 2 * n + 1; i += 2) dfact *= i;
  double term = std::pow(x, n) / dfact;
  double sum = term;
  for (int k = 1; k < 40; ++k) {
    term *= -x * x / 2.0 / k / (2 * n + 2 * k + 1);
    sum += term;
  }
  return sum;
}

// Cyclic Jacobi on the real 2n x 2n embedding [[Re, -Im], [Im, Re]]; each
// eigenvalue of the Hermitian input appears twice.
std::vector<double> jacobi_eigenvalues(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  Eigen::MatrixXd a(2 * n, 2 * n);
  a << h.real(), -h.imag(), h.imag(), h.real();
  const Eigen::Index m = 2 * n;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = p + 1; q < m; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26 * a.squaredNorm()) break;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  std::vector<double> out;
  for (std::size_t i = 0; i < ev.size(); i += 2) out.push_back(ev[i]);
  return out;
}

CMatrix random_psd(std::mt19937_64& rng, int n, int rank) {
  CMatrix a(n, rank);
  for (int j = 0; j < rank; ++j) a.col(j) = testutil::random_cvector(rng, n);
  return a * a.adjoint();
}

}  // namespace

TEST_SUITE("sphharm") {
  TEST_CASE("constant harmonic and the n=1 zenith value") {
    CHECK(sh_eval(0, 0, {0.3, 1.2}).real() == doctest::Approx(0.2820948).epsilon(1e-7));
    CHECK(std::abs(sh_eval(0, 0, {2.0, 5.0}).imag()) < 1e-15);
    CHECK(sh_eval(1, 0, {0.0, 0.0}).real() == doctest::Approx(0.4886025).epsilon(1e-7));
  }

  TEST_CASE("low orders match closed-form expressions") {
    std::mt19937_64 rng(7);
    const int idx[] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 12, 15};
    for (int trial = 0; trial < 50; ++trial) {
      const Direction d = random_direction(rng);
      for (int k : idx) {
        const int n = static_cast<int>(std::floor(std::sqrt(k)));
        const int m = k - n * n - n;
        const cdouble want = y_closed_form(n, m, d.theta, d.phi);
        CHECK(std::abs(sh_eval(n, m, d) - want) < 1e-12);
      }
    }
  }

  TEST_CASE("negative degrees follow the conjugate symmetry") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const Direction d = random_direction(rng);
      for (int n = 0; n <= 10; ++n)
        for (int m = 1; m <= n; ++m)
          CHECK(std::abs(sh_eval(n, -m, d) - ((m % 2) ? -1.0 : 1.0) * std::conj(sh_eval(n, m, d))) < 1e-12);
    }
  }

  TEST_CASE("addition theorem holds up to order 10") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      const Direction d = random_direction(rng);
      for (int order : {3, 10}) {
        const CVector y = sh_vector(d, order);
        CHECK(y.squaredNorm() == doctest::Approx(sh_count(order) / (4 * kPi)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("invalid (n, m) is rejected") {
    CHECK_THROWS_AS(sh_eval(2, 3, {0.1, 0.1}), ArgumentError);
    CHECK_THROWS_AS(sh_eval(-1, 0, {0.1, 0.1}), ArgumentError);
  }

  TEST_CASE("sh_matrix layout and rank") {
    const Direction one[] = {{0.4, 0.9}};
    const CMatrix single = sh_matrix(one, 0);
    CHECK(single.rows() == 1);
    CHECK(single.cols() == 1);
    CHECK(single(0, 0).real() == doctest::Approx(1.0 / std::sqrt(4 * kPi)));

    // 1-based column 5 is (n, m) = (2, -2).
    CHECK(sh_index(2, -2) + 1 == 5);
    std::mt19937_64 rng(10);
    std::vector<Direction> dirs;
    for (int i = 0; i < 5; ++i) dirs.push_back(random_direction(rng));
    const CMatrix y = sh_matrix(dirs, 3);
    for (int q = 0; q < 5; ++q) CHECK(std::abs(y(q, 4) - sh_eval(2, -2, dirs[static_cast<std::size_t>(q)])) < 1e-14);

    const auto arr = default_array_geometry();
    const CMatrix ya = arr.sh_matrix();
    CHECK(ya.rows() == 32);
    CHECK(ya.cols() == 16);
    Eigen::JacobiSVD<CMatrix> svd(ya);
    CHECK(svd.singularValues().minCoeff() > 1e-3 * svd.singularValues().maxCoeff());
  }

  TEST_CASE("open-sphere radial function") {
    CHECK(radial_open_sphere(0, 0.0).real() == doctest::Approx(12.56637).epsilon(1e-6));
    const cdouble b1 = radial_open_sphere(1, 0.5);
    const double j1 = std::sin(0.5) / 0.25 - std::cos(0.5) / 0.5;
    CHECK(j1 == doctest::Approx(0.16254).epsilon(1e-4));
    CHECK(std::abs(b1.real()) < 1e-15);
    CHECK(b1.imag() == doctest::Approx(4 * kPi * j1).epsilon(1e-12));
    CHECK(std::abs(radial_open_sphere(2, 0.0)) == 0.0);
    for (int n = 0; n <= 5; ++n)
      for (double x : {0.1, 0.7, 1.5, 3.0, 4.2}) {
        const cdouble b = radial_open_sphere(n, x);
        CHECK(std::abs(b) == doctest::Approx(4 * kPi * std::abs(sph_bessel_series(n, x))).epsilon(1e-10));
      }
  }

  TEST_CASE("pseudo-inverse") {
    const CMatrix eye = CMatrix::Identity(4, 4);
    CHECK((pseudo_inverse(eye) - eye).norm() < 1e-14);

    CMatrix col(2, 1);
    col << 1.0, 1.0;
    const CMatrix pc = pseudo_inverse(col);
    CHECK(pc.rows() == 1);
    CHECK(std::abs(pc(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(pc(0, 1) - 0.5) < 1e-14);

    const CMatrix y = default_array_geometry().sh_matrix();
    CHECK((pseudo_inverse(y) * y - CMatrix::Identity(16, 16)).norm() < 1e-9);

    CMatrix deficient(3, 2);
    deficient << 1, 2, 2, 4, 3, 6;
    CHECK_THROWS_AS(pseudo_inverse(deficient), NumericalRankError);
  }

  TEST_CASE("Hermitian eigendecomposition") {
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 3.0;
    const auto e = hermitian_eig(d);
    CHECK(e.values(0) == doctest::Approx(3.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(e.vectors(1, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(e.vectors(0, 1)) - 1.0) < 1e-12);

    std::mt19937_64 rng(11);
    CVector v = testutil::random_cvector(rng, 16);
    v *= 2.0 / v.norm();
    const auto r1 = hermitian_eig(v * v.adjoint());
    CHECK(r1.values(0) == doctest::Approx(4.0).epsilon(1e-12));
    for (int i = 1; i < 16; ++i) CHECK(std::abs(r1.values(i)) < 1e-12);

    for (int trial = 0; trial < 20; ++trial) {
      const CMatrix m = random_psd(rng, 16, 1 + trial % 16);
      const auto eig = hermitian_eig(m);
      const CMatrix rec = eig.vectors * eig.values.cast<cdouble>().asDiagonal() * eig.vectors.adjoint();
      CHECK((rec - m).norm() < 1e-8 * m.norm());
      for (int i = 1; i < 16; ++i) CHECK(eig.values(i) <= eig.values(i - 1));
      CHECK(eig.values.minCoeff() >= -1e-10 * m.norm());
      CHECK(eig.values.sum() == doctest::Approx(m.trace().real()).epsilon(1e-9));
      const auto oracle = jacobi_eigenvalues(m);
      for (int i = 0; i < 16; ++i)
        CHECK(std::abs(eig.values(i) - oracle[static_cast<std::size_t>(i)]) < 1e-9 * m.norm());
    }
  }

  TEST_CASE("non-Hermitian input is rejected, near-Hermitian symmetrized") {
    CMatrix m = CMatrix::Identity(3, 3);
    m(0, 1) = 0.5;
    CHECK_THROWS_AS(hermitian_eig(m), ArgumentError);
    m(1, 0) = 0.5 + 1e-13;
    CHECK_NOTHROW(hermitian_eig(m));
  }

  TEST_CASE("direction grid size and validity") {
    const auto g10 = direction_grid(10.0);
    CHECK(g10.size() >= 300);
    CHECK(g10.size() <= 550);
    for (const auto& d : g10.directions()) {
      CHECK(d.theta >= 0.0);
      CHECK(d.theta <= kPi);
      CHECK(d.phi >= 0.0);
      CHECK(d.phi < 2 * kPi);
    }
    CHECK_THROWS(direction_grid(0.05));
    CHECK_THROWS(direction_grid(12.0));
  }

  TEST_CASE("2 degree grid spacing is near uniform") {
    const auto g = direction_grid(2.0);
    const double res = testutil::rad(2.0);
    double lo = 1e9, hi = 0.0;
    const auto& u = g.unit_vectors();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double best = 1e9;
      for (std::size_t j : g.within(u.col(static_cast<Eigen::Index>(i)), 3 * res)) {
        if (j == i) continue;
        best = std::min(best, std::acos(std::clamp(u.col(static_cast<Eigen::Index>(i)).dot(u.col(static_cast<Eigen::Index>(j))), -1.0, 1.0)));
      }
      lo = std::min(lo, best);
      hi = std::max(hi, best);
    }
    CHECK(hi / lo <= 2.0);
    CHECK(hi <= 2.0 * res);
    CHECK(lo >= 0.5 * res);
  }

  TEST_CASE("grid neighbourhood queries agree with brute force") {
    const auto g = direction_grid(3.0);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      const Direction d = random_direction(rng);
      const Eigen::Vector3d u = d.unit_vector();
      const double r = testutil::rad(7.0);
      std::vector<std::size_t> brute;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.unit_vectors().col(static_cast<Eigen::Index>(i)).dot(u) >= std::cos(r)) brute.push_back(i);
      CHECK(g.within(u, r) == brute);
      std::size_t best = 0;
      (g.unit_vectors().transpose() * u).maxCoeff(&best);
      CHECK(g.nearest(d) == best);
    }
  }

  TEST_CASE("orthonormality by quadrature") {
    const auto g = direction_grid(1.0);
    const CMatrix y = sh_matrix(g.directions(), 3);
    const CMatrix gram = y.adjoint() * y * (4 * kPi / static_cast<double>(g.size()));
    CHECK((gram - CMatrix::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-3);
  }

  TEST_CASE("Parseval identity for random coefficient vectors") {
    const auto g = direction_grid(1.0);
    const CMatrix y = sh_matrix(g.directions(), 3);
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const CVector a = testutil::random_cvector(rng, 16);
      const double integral = (y * a).squaredNorm() * 4 * kPi / static_cast<double>(g.size());
      CHECK(integral == doctest::Approx(a.squaredNorm()).epsilon(1e-3));
    }
  }

  TEST_CASE("direction helpers") {
    CHECK(wrap_two_pi(-0.5) == doctest::Approx(2 * kPi - 0.5));
    CHECK(wrap_two_pi(2 * kPi) == doctest::Approx(0.0));
    CHECK_THROWS_AS(make_direction(-0.1, 0.0), ArgumentError);
    const Direction d = make_direction(1.0, 7.0);
    CHECK(d.phi == doctest::Approx(7.0 - 2 * kPi));
    const Direction back = Direction::from_vector(d.unit_vector() * 3.0);
    CHECK(back.theta == doctest::Approx(d.theta));
    CHECK(back.phi == doctest::Approx(d.phi));
    CHECK(angle_between({0.0, 0.0}, {kPi, 0.0}) == doctest::Approx(kPi));
  }
}
