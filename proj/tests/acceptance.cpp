// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Sweep criteria use the default configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sfdoa/harness.hpp"
#include "test_util.hpp"

using namespace sfdoa;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s -- %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string f2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double median_of(const std::vector<ConditionResult>& rows, Method m, double t60, double snr) {
  std::vector<double> e;
  for (const auto& r : rows)
    if (r.method == m && r.t60_s == t60 && r.diffuse_snr_db == snr) e.push_back(r.error_deg);
  return error_stats(e).median;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void print_table(const std::vector<ConditionResult>& rows) {
  std::printf("%-9s %6s %6s %9s %9s %9s %7s\n", "method", "t60_s", "snr_db", "median", "q1", "q3", "failed");
  for (const auto& g : group_stats(rows))
    std::printf("%-9s %6.2f %6.1f %9.3f %9.3f %9.3f %7zu\n", method_name(g.method).c_str(), g.t60_s, g.diffuse_snr_db,
                g.stats.median, g.stats.q1, g.stats.q3, g.stats.failed);
  std::fflush(stdout);
}

// ---------------------------------------------------------------- sweeps

void sweep_criteria(const std::vector<ConditionResult>& rows, const TimingTable& timing) {
  const Method thr = Method::ThrGmm, dir = Method::DirGmm, gcc = Method::GccPhat;

  {
    const double a = median_of(rows, thr, 0.0, 40.0), b = median_of(rows, dir, 0.0, 40.0),
                 c = median_of(rows, gcc, 0.0, 40.0);
    report(1, "anechoic accuracy", a < 1.0 && b < 1.0 && c < 1.0,
           "medians THR " + f2(a) + ", DIR " + f2(b) + ", GCC " + f2(c) + " deg (need < 1)");
  }
  {
    const double a = median_of(rows, thr, 1.0, 40.0), b = median_of(rows, dir, 1.0, 40.0),
                 c = median_of(rows, gcc, 1.0, 40.0);
    const bool dpd_ok = a <= 3.0 && b <= 3.0;
    const bool gcc_ok = c >= 5.0 && c >= 2.0 * std::max(a, b);
    report(2, "reverberation robustness", dpd_ok && gcc_ok,
           "T60 1 s medians THR " + f2(a) + ", DIR " + f2(b) + " deg (need <= 3); GCC " + f2(c) +
               " deg (need >= 5 and >= 2x DPD)");
  }
  {
    bool ok = true;
    std::string detail = "T60 0.25 s medians";
    for (double snr : {40.0, 30.0, 20.0, 10.0, 0.0}) {
      const double a = median_of(rows, thr, 0.25, snr), b = median_of(rows, dir, 0.25, snr);
      ok = ok && a <= 2.0 && b <= 2.0;
      detail += " | " + f2(snr) + " dB: THR " + f2(a) + " DIR " + f2(b);
    }
    const double g40 = median_of(rows, gcc, 0.25, 40.0), g0 = median_of(rows, gcc, 0.25, 0.0);
    const bool gcc_ok = g0 >= 3.0 * g40;
    detail += " (need <= 2); GCC 0 dB / 40 dB = " + f2(g0) + " / " + f2(g40) + " = " + f2(g0 / g40) + " (need >= 3)";
    report(3, "noise robustness", ok && gcc_ok, detail);
  }
  {
    const double thr_t = timing.mean_time_s.count(thr) ? timing.mean_time_s.at(thr) : NAN;
    const double dir_t = timing.mean_time_s.count(dir) ? timing.mean_time_s.at(dir) : NAN;
    const double gcc_t = timing.mean_time_s.count(gcc) ? timing.mean_time_s.at(gcc) : NAN;
    report(4, "runtime ratio", timing.thr_dir_ratio >= 3.0 && timing.dir_faster_everywhere,
           "mean localization time THR " + f2(thr_t) + " s, DIR " + f2(dir_t) + " s, GCC " + f2(gcc_t) +
               " s; THR/DIR = " + f2(timing.thr_dir_ratio) + " (need >= 3); DIR faster in every condition: " +
               (timing.dir_faster_everywhere ? "yes" : "no"));
  }
}

// ------------------------------------------------------------- properties

void directivity_bounds() {
  const SteeringSearch search(direction_grid(1.0), 3);
  std::mt19937_64 rng(501);
  double lo = 1e9, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double d = directivity(testutil::random_cvector(rng, 16), search).value;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  double pw_dev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const CVector a = sh_vector(testutil::random_direction(rng), 3).conjugate() * std::polar(1.0 + i, 0.1 * i);
    pw_dev = std::max(pw_dev, std::abs(directivity(a, search).value - 16.0));
  }
  double const_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    CVector a = CVector::Zero(16);
    a(0) = testutil::random_cvector(rng, 1)(0);
    const_dev = std::max(const_dev, std::abs(directivity(a, search).value - 1.0));
  }
  const bool ok = lo >= 0.99 && hi <= 16.0 + 1e-9 && pw_dev <= 0.02 && const_dev <= 1e-9;
  std::ostringstream os;
  os << "random vectors in [" << f2(lo) << ", " << f2(hi) << "] (need [0.99, 16+1e-9]); plane-wave max |DIR-16| = "
     << pw_dev << " (need <= 0.02); constant-field max |DIR-1| = " << const_dev << " (need <= 1e-9)";
  report(5, "directivity bounds", ok, os.str());
}

void rank_one_oracle() {
  std::mt19937_64 rng(601);
  bool rank1_ok = true;
  for (int i = 0; i < 200; ++i) {
    const CVector v = testutil::random_cvector(rng, 16);
    const double th = 1.0 + std::pow(10.0, (i % 10) - 2.0);
    const auto r = thr_test(CMatrix(v * v.adjoint()), th);
    rank1_ok = rank1_ok && std::isinf(r.ratio) && r.ratio > 0 && r.pass;
  }
  const auto id = thr_test(CMatrix::Identity(16, 16), 2.0);
  const bool id_ok = std::abs(id.ratio - 1.0) <= 1e-9 && !id.pass;
  std::ostringstream os;
  os << "rank-one inputs report +inf and pass: " << (rank1_ok ? "yes" : "no") << "; identity ratio " << id.ratio
     << ", passes TH=2: " << (id.pass ? "yes" : "no");
  report(6, "rank-one oracle", rank1_ok && id_ok, os.str());
}

void parseval_suite() {
  const auto grid = direction_grid(1.0);
  const CMatrix y = sh_matrix(grid.directions(), 3);
  const double w = 4.0 * kPi / static_cast<double>(grid.size());
  const double ortho = (y.adjoint() * y * w - CMatrix::Identity(16, 16)).cwiseAbs().maxCoeff();

  std::mt19937_64 rng(701);
  double addition = 0.0;
  for (int i = 0; i < 1000; ++i)
    addition = std::max(addition, std::abs(sh_vector(testutil::random_direction(rng), 3).squaredNorm() - 16.0 / (4.0 * kPi)));
  double parseval = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CVector a = testutil::random_cvector(rng, 16);
    parseval = std::max(parseval, std::abs((y * a).squaredNorm() * w - a.squaredNorm()) / a.squaredNorm());
  }
  double trace = 0.0;
  for (int i = 0; i < 100; ++i) {
    CMatrix b(16, 1 + i % 16);
    for (Eigen::Index j = 0; j < b.cols(); ++j) b.col(j) = testutil::random_cvector(rng, 16);
    const CMatrix m = b * b.adjoint();
    const double tr = m.trace().real();
    trace = std::max(trace, std::abs(hermitian_eig(m).values.sum() - tr) / tr);
  }
  const bool ok = ortho < 1e-3 && addition < 1e-9 && parseval < 1e-3 && trace < 1e-9;
  std::ostringstream os;
  os << "orthonormality max dev " << ortho << " (< 1e-3); addition theorem " << addition << " (< 1e-9); Parseval rel "
     << parseval << " (< 1e-3); eigenvalue sum vs trace " << trace << " (< 1e-9)";
  report(7, "Parseval / orthonormality", ok, os.str());
}

void simulator_validity(const ExperimentConfig& cfg) {
  const auto arr = cfg.array();
  const auto mics = arr.positions(cfg.array_center);
  bool ok = true;
  std::ostringstream os;
  for (double t60 : {0.25, 0.5, 1.0}) {
    RoomConfig room = cfg.room;
    const BetaChoice b = scene_beta(cfg, t60);
    room.beta = b.beta;
    const double dur = std::max(0.3, 2.0 * t60);
    double lo = 1e9, hi = 0.0;
    for (std::size_t q = 0; q < mics.size(); q += 4) {
      const double est = estimate_t60_schroeder(simulate_rir(room, cfg.source(), mics[q], dur));
      lo = std::min(lo, est);
      hi = std::max(hi, est);
    }
    ok = ok && lo >= 0.8 * t60 && hi <= 1.2 * t60;
    RoomConfig sabine = cfg.room;
    sabine.beta = b.sabine_beta;
    const double sab = estimate_t60_schroeder(simulate_rir(sabine, cfg.source(), cfg.array_center, dur));
    os << "T60 " << f2(t60) << " s: beta " << f2(b.beta) << " gives " << f2(lo) << ".." << f2(hi)
       << " s (Sabine beta " << f2(b.sabine_beta) << " would give " << f2(sab) << " s); ";
  }
  os << "need within +-20%";
  report(8, "simulator validity", ok, os.str());
}

void pipeline_oracle(const ExperimentConfig& cfg) {
  const auto arr = cfg.array();
  const BandSelection band = default_band(arr, cfg.room.fs, cfg.stft.fft_size, cfg.room.speed_of_sound, cfg.band_f_low);
  const PlaneWaveDecomposer pwd(arr, band, cfg.room.fs, cfg.stft.fft_size, cfg.room.speed_of_sound, cfg.reg_max_gain_db);
  const SteeringSearch search(direction_grid(cfg.grid_resolution_deg), arr.order, cfg.search);
  const double res = cfg.grid_resolution_deg;
  std::mt19937_64 rng(901);
  double worst_thr = 0.0, worst_dir = 0.0, worst_agree = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Direction psi = testutil::random_direction(rng);
    const auto mic = testutil::plane_wave_mic_tensor(arr, psi, 12, cfg.room.fs, cfg.stft.fft_size,
                                                     cfg.room.speed_of_sound, 950 + static_cast<std::uint64_t>(trial));
    const auto a = pwd.apply(mic);
    for (const DpdParams* p : {&cfg.thr, &cfg.dir}) {
      const auto d = run_dpd(a, *p, search);
      std::vector<Direction> dirs;
      for (const auto& s : d.samples) dirs.push_back(s.direction);
      double err = 180.0;
      if (!dirs.empty()) err = angular_error(estimate_doa(dirs, true, 1, cfg.gmm).direction, psi);
      (p->variant == DpdVariant::Thr ? worst_thr : worst_dir) =
          std::max(p->variant == DpdVariant::Thr ? worst_thr : worst_dir, err);
    }
    for (std::size_t nu = 0; nu < a.bins(); nu += 10) {
      const CVector v = a.vec(0, nu);
      const auto da = directivity(v, search).argmax.direction;
      const auto ma = music_doa(CMatrix(v * v.adjoint()), search).direction;
      worst_agree = std::max(worst_agree, angular_error(da, ma));
    }
  }
  const bool ok = worst_thr <= res && worst_dir <= res && worst_agree <= 1.5 * res;
  std::ostringstream os;
  os << "worst error THR " << f2(worst_thr) << ", DIR " << f2(worst_dir) << " deg (need <= " << f2(res)
     << "); DIR vs MUSIC argmax " << f2(worst_agree) << " deg (need within one cell, <= " << f2(1.5 * res) << ")";
  report(9, "pipeline oracle", ok, os.str());
}

}  // namespace

int main() {
  const ExperimentConfig cfg;
  const std::string out = output_dir("acceptance_out");
  std::filesystem::create_directories(out);
  std::printf("acceptance: output directory %s\n", out.c_str());

  directivity_bounds();
  rank_one_oracle();
  parseval_suite();
  simulator_validity(cfg);
  pipeline_oracle(cfg);

  // Criteria 1-4: one serial, timed default sweep.
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ConditionResult> timed_rows;
  const TimingTable timing = bench_timing(cfg, &timed_rows);
  const double sweep1_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ExperimentConfig timed_cfg = cfg;
  timed_cfg.record_times = true;
  emit_results(timed_rows, timed_cfg, (std::filesystem::path(out) / "timed").string());
  std::printf("timed default sweep: %zu rows in %.1f s\n", timed_rows.size(), sweep1_s);
  print_table(timed_rows);
  sweep_criteria(timed_rows, timing);

  // Criterion 10: a second, untimed default sweep must write the same
  // results.csv as the first one with its timings removed.
  std::vector<ConditionResult> stripped = timed_rows;
  for (auto& r : stripped) r.time_s = std::numeric_limits<double>::quiet_NaN();
  const auto run1 = std::filesystem::path(out) / "run1";
  const auto run2 = std::filesystem::path(out) / "run2";
  emit_results(stripped, cfg, run1.string());
  const auto rows2 = sweep(cfg);
  emit_results(rows2, cfg, run2.string());
  const std::string a = read_file(run1 / "results.csv"), b = read_file(run2 / "results.csv");
  report(10, "determinism", !a.empty() && a == b,
         std::to_string(rows2.size()) + " rows; results.csv " + (a == b ? "byte-identical" : "differs") + " (" +
             std::to_string(a.size()) + " bytes)");

  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
