#include "sfdoa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "sfdoa/errors.hpp"
#include "sfdoa/signal.hpp"
#include "sfdoa/wav.hpp"

namespace sfdoa {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent random streams per realization.
enum Stream : std::uint64_t { kSensorNoise = 1, kDiffuseSh = 2, kDiffuseMic = 3, kGmmSeed = 4 };

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t t60_key(double t60) { return static_cast<std::uint64_t>(std::llround(t60 * 1e6)); }

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s.empty() || s == "nan") return kNaN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw IoError("malformed number '" + s + "' in results file");
  return v;
}

int method_rank(Method m) { return static_cast<int>(m); }

}  // namespace

double angular_error(const Direction& est, const Direction& truth) {
  const double c = std::clamp(est.unit_vector().dot(truth.unit_vector()), -1.0, 1.0);
  const double s = est.unit_vector().cross(truth.unit_vector()).norm();
  // atan2 keeps full precision near 0 and 180 degrees; same value as acos(c).
  return std::atan2(s, c) * 180.0 / kPi;
}

BetaChoice scene_beta(const ExperimentConfig& cfg, double t60) {
  static std::mutex mutex;
  static std::map<std::string, BetaChoice> memo;
  const auto sab = t60_to_beta(t60, cfg.room);
  BetaChoice out;
  out.sabine_beta = sab.beta;
  out.sabine_floored = sab.floored;
  if (cfg.beta_mapping == "sabine" || t60 == 0.0) {
    out.beta = sab.beta;
    return out;
  }
  const Eigen::Vector3d src = cfg.source();
  std::ostringstream key;
  key.precision(17);
  key << cfg.room.dimensions.transpose() << ' ' << cfg.room.speed_of_sound << ' ' << cfg.room.fs << ' '
      << src.transpose() << ' ' << cfg.array_center.transpose() << ' ' << t60;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = memo.find(key.str());
  if (it == memo.end()) {
    const CalibratedBeta cal = calibrate_beta(t60, cfg.room, src, cfg.array_center);
    out.beta = cal.beta;
    out.measured_t60 = cal.measured_t60;
    it = memo.emplace(key.str(), out).first;
  }
  return it->second;
}

std::vector<Condition> sweep_conditions(const ExperimentConfig& cfg) {
  std::vector<Condition> out;
  for (double t : cfg.t60_list) out.push_back({t, cfg.t60_sweep_snr_db});
  for (double s : cfg.snr_list) out.push_back({cfg.snr_sweep_t60, s});
  std::sort(out.begin(), out.end(), [](const Condition& a, const Condition& b) {
    if (a.t60_s != b.t60_s) return a.t60_s < b.t60_s;
    return a.diffuse_snr_db > b.diffuse_snr_db;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Condition& a, const Condition& b) {
                          return a.t60_s == b.t60_s && a.diffuse_snr_db == b.diffuse_snr_db;
                        }),
            out.end());
  return out;
}

bool ConditionResult::failed() const { return std::isnan(error_deg); }

bool canonical_less(const ConditionResult& a, const ConditionResult& b) {
  if (a.method != b.method) return method_rank(a.method) < method_rank(b.method);
  if (a.t60_s != b.t60_s) return a.t60_s < b.t60_s;
  if (a.diffuse_snr_db != b.diffuse_snr_db) return a.diffuse_snr_db > b.diffuse_snr_db;
  if (a.realization != b.realization) return a.realization < b.realization;
  return a.speaker < b.speaker;
}

// ------------------------------------------------------------- experiment

struct Experiment::Scene {
  std::vector<ImpulseResponse> rirs;
  std::vector<MicSignals> clean;  // per speaker
};

struct Experiment::Impl {
  std::mutex mutex;
  std::map<std::uint64_t, std::unique_ptr<Scene>> scenes;
  std::vector<std::unique_ptr<std::vector<double>>> speakers;
  BandSelection band;
  std::unique_ptr<PlaneWaveDecomposer> pwd;
  std::unique_ptr<SteeringSearch> search;
  GccConfig gcc;
  std::vector<std::size_t> gcc_mics;
};

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>()) {
  cfg_.validate();
  array_ = cfg_.array();
  const double fs = cfg_.room.fs;
  const double c = cfg_.room.speed_of_sound;
  impl_->band = default_band(array_, fs, cfg_.stft.fft_size, c, cfg_.band_f_low);
  impl_->pwd = std::make_unique<PlaneWaveDecomposer>(array_, impl_->band, fs, cfg_.stft.fft_size, c,
                                                     cfg_.reg_max_gain_db);
  auto grid = std::make_shared<const DirectionGrid>(direction_grid(cfg_.grid_resolution_deg));
  impl_->search = std::make_unique<SteeringSearch>(*grid, array_.order, cfg_.search);
  const double df = fs / static_cast<double>(cfg_.stft.fft_size);
  impl_->gcc = default_gcc_config(array_, grid, cfg_.gcc_mics, fs, impl_->band.low * df, impl_->band.high * df);
  impl_->gcc.options.frame = cfg_.gcc_frame;
  impl_->gcc.options.hop = cfg_.gcc_hop;
  impl_->gcc.options.interp = cfg_.gcc_interp;
  impl_->gcc.speed_of_sound = c;
  impl_->gcc_mics = mics_in_pairs(impl_->gcc);
  impl_->speakers.resize(cfg_.speakers.size());
}

Experiment::~Experiment() = default;

BandSelection Experiment::band() const { return impl_->band; }
const SteeringSearch& Experiment::search() const { return *impl_->search; }

std::string Experiment::speaker_label(int realization) const {
  return cfg_.speakers[static_cast<std::size_t>(realization) % cfg_.speakers.size()];
}

const std::vector<double>& Experiment::speaker_signal(std::size_t index) {
  // Caller holds the mutex.
  auto& slot = impl_->speakers.at(index);
  if (!slot) {
    const std::string& s = cfg_.speakers[index];
    if (s.rfind("synthetic:", 0) == 0) {
      std::uint64_t n = 0;
      const std::string tail = s.substr(10);
      const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), n);
      if (res.ec != std::errc() || res.ptr != tail.data() + tail.size())
        throw ConfigurationError("bad synthetic speaker label '" + s + "'");
      slot = std::make_unique<std::vector<double>>(
          synthetic_speech(cfg_.synthetic_duration_s, cfg_.room.fs, mix_seed(n, {})));
    } else {
      slot = std::make_unique<std::vector<double>>(read_speech_wav(s, cfg_.room.fs));
    }
  }
  return *slot;
}

const Experiment::Scene& Experiment::scene(double t60) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  auto& slot = impl_->scenes[t60_key(t60)];
  if (!slot) {
    auto sc = std::make_unique<Scene>();
    RoomConfig room = cfg_.room;
    room.beta = scene_beta(cfg_, t60).beta;
    const auto mics = array_.positions(cfg_.array_center);
    sc->rirs = simulate_rirs(room, cfg_.source(), mics, cfg_.rir_duration(t60));
    for (std::size_t s = 0; s < cfg_.speakers.size(); ++s)
      sc->clean.push_back(synth_mic_signals(sc->rirs, speaker_signal(s), room.fs));
    slot = std::move(sc);
  }
  return *slot;
}

const std::vector<ImpulseResponse>& Experiment::rirs(double t60) { return scene(t60).rirs; }

MicSignals Experiment::mic_signals(double t60, int realization) {
  const Scene& sc = scene(t60);
  const auto spk = static_cast<std::uint64_t>(realization) % cfg_.speakers.size();
  return add_sensor_noise(sc.clean[spk], cfg_.sensor_snr_db,
                          mix_seed(cfg_.master_seed, {static_cast<std::uint64_t>(realization), spk, kSensorNoise}));
}

TimeFreqTensor Experiment::coefficients(double t60, double diffuse_snr_db, int realization) {
  const auto spk = static_cast<std::uint64_t>(realization) % cfg_.speakers.size();
  const TimeFreqTensor a = impl_->pwd->apply(stft(mic_signals(t60, realization), cfg_.stft));
  return add_diffuse_noise_sh(a, diffuse_snr_db,
                              mix_seed(cfg_.master_seed, {static_cast<std::uint64_t>(realization), spk, kDiffuseSh}));
}

std::vector<ConditionResult> Experiment::run_group(double t60, const std::vector<double>& snrs, int realization) {
  return run_methods(t60, snrs, realization, cfg_.methods);
}

std::vector<ConditionResult> Experiment::run_methods(double t60, const std::vector<double>& snrs, int realization,
                                                     const std::vector<Method>& methods) {
  const auto r = static_cast<std::uint64_t>(realization);
  const auto spk = r % cfg_.speakers.size();
  const std::string label = speaker_label(realization);
  const Direction truth = cfg_.truth();
  const bool timed = cfg_.record_times;

  const MicSignals noisy = mic_signals(t60, realization);

  // PWD is part of the DPD localization stage; it runs once per realization
  // and its time is charged to both DPD methods.
  const TimeFreqTensor tf = stft(noisy, cfg_.stft);
  const auto t_pwd0 = Clock::now();
  const TimeFreqTensor a = impl_->pwd->apply(tf);
  const double t_pwd = seconds_since(t_pwd0);
  const double ref_power = mean_coefficient_power(a);

  std::vector<ConditionResult> out;
  for (double snr : snrs) {
    auto base = [&](Method m) {
      ConditionResult row;
      row.method = m;
      row.t60_s = t60;
      row.diffuse_snr_db = snr;
      row.realization = realization;
      row.speaker = label;
      row.time_s = kNaN;
      return row;
    };

    std::optional<TimeFreqTensor> a_noisy;
    for (Method m : methods) {
      ConditionResult row = base(m);
      if (m == Method::GccPhat) {
        MicSignals sig;
        sig.fs = noisy.fs;
        sig.channels.resize(noisy.count());
        for (std::size_t q : impl_->gcc_mics) sig.channels[q] = noisy.channels[q];
        if (!(std::isinf(snr) && snr > 0)) {
          const double var = ref_power / std::pow(10.0, snr / 10.0);
          const MicSignals dn = diffuse_noise_mic(array_, impl_->band, cfg_.stft, noisy.fs, cfg_.room.speed_of_sound,
                                                  noisy.length(), var, mix_seed(cfg_.master_seed, {r, spk, kDiffuseMic}),
                                                  impl_->gcc_mics);
          for (std::size_t q : impl_->gcc_mics)
            for (std::size_t i = 0; i < sig.channels[q].size(); ++i) sig.channels[q][i] += dn.channels[q][i];
        }
        const auto t0 = Clock::now();
        try {
          const SrpResult est = srp_doa(sig, array_, impl_->gcc);
          row.error_deg = angular_error(est.direction, truth);
        } catch (const DegenerateInputError&) {
          row.error_deg = kNaN;
        }
        if (timed) row.time_s = seconds_since(t0);
      } else {
        if (!a_noisy) a_noisy = add_diffuse_noise_sh(a, snr, mix_seed(cfg_.master_seed, {r, spk, kDiffuseSh}));
        const DpdParams& p = m == Method::ThrGmm ? cfg_.thr : cfg_.dir;
        const auto t0 = Clock::now();
        const DpdResult d = run_dpd(*a_noisy, p, *impl_->search);
        std::vector<Direction> dirs;
        dirs.reserve(d.samples.size());
        for (const auto& s : d.samples) dirs.push_back(s.direction);
        row.bins_selected = d.stats.bins_selected;
        try {
          const DoaEstimate est =
              estimate_doa(dirs, cfg_.use_gmm, mix_seed(cfg_.master_seed, {r, spk, kGmmSeed}), cfg_.gmm);
          row.error_deg = angular_error(est.direction, truth);
        } catch (const EstimationError&) {
          row.error_deg = kNaN;
        }
        if (timed) row.time_s = t_pwd + seconds_since(t0);
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

ConditionResult Experiment::run_condition(Method method, double t60, double diffuse_snr_db, int realization) {
  return run_methods(t60, {diffuse_snr_db}, realization, {method}).front();
}

std::vector<ConditionResult> sweep(Experiment& exp) {
  const auto& cfg = exp.config();
  const auto conds = sweep_conditions(cfg);
  struct Job {
    double t60;
    std::vector<double> snrs;
    int realization;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < conds.size();) {
    std::vector<double> snrs;
    std::size_t j = i;
    for (; j < conds.size() && conds[j].t60_s == conds[i].t60_s; ++j) snrs.push_back(conds[j].diffuse_snr_db);
    for (int r = 0; r < cfg.realizations; ++r) jobs.push_back({conds[i].t60_s, snrs, r});
    i = j;
  }

  std::vector<std::vector<ConditionResult>> parts(jobs.size());
  const int workers = cfg.record_times ? 1 : std::min<int>(cfg.workers, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < jobs.size(); ++k) parts[k] = exp.run_group(jobs[k].t60, jobs[k].snrs, jobs[k].realization);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
          try {
            parts[k] = exp.run_group(jobs[k].t60, jobs[k].snrs, jobs[k].realization);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<ConditionResult> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  std::stable_sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<ConditionResult> sweep(const ExperimentConfig& cfg) {
  Experiment exp(cfg);
  return sweep(exp);
}

// ------------------------------------------------------------------ timing

TimingTable timing_table(const std::vector<ConditionResult>& results) {
  TimingTable table;
  std::map<std::tuple<int, double, double>, std::pair<double, std::size_t>> acc;
  std::map<Method, std::pair<double, std::size_t>> per_method;
  for (const auto& r : results) {
    if (std::isnan(r.time_s)) continue;
    auto& a = acc[{method_rank(r.method), r.t60_s, -r.diffuse_snr_db}];
    a.first += r.time_s;
    ++a.second;
    auto& m = per_method[r.method];
    m.first += r.time_s;
    ++m.second;
  }
  for (const auto& [key, v] : acc) {
    TimingRow row;
    row.method = static_cast<Method>(std::get<0>(key));
    row.t60_s = std::get<1>(key);
    row.diffuse_snr_db = -std::get<2>(key);
    row.mean_time_s = v.first / static_cast<double>(v.second);
    row.runs = v.second;
    table.per_condition.push_back(row);
  }
  for (const auto& [m, v] : per_method) table.mean_time_s[m] = v.first / static_cast<double>(v.second);

  const bool both = table.mean_time_s.count(Method::ThrGmm) && table.mean_time_s.count(Method::DirGmm);
  table.thr_dir_ratio = both ? table.mean_time_s[Method::ThrGmm] / table.mean_time_s[Method::DirGmm] : kNaN;
  table.dir_faster_everywhere = both;
  if (both) {
    for (const auto& thr : table.per_condition) {
      if (thr.method != Method::ThrGmm) continue;
      bool found = false;
      for (const auto& dir : table.per_condition) {
        if (dir.method == Method::DirGmm && dir.t60_s == thr.t60_s && dir.diffuse_snr_db == thr.diffuse_snr_db) {
          found = true;
          if (!(dir.mean_time_s < thr.mean_time_s)) table.dir_faster_everywhere = false;
        }
      }
      if (!found) table.dir_faster_everywhere = false;
    }
  }
  return table;
}

TimingTable bench_timing(const ExperimentConfig& cfg, std::vector<ConditionResult>* results) {
  ExperimentConfig timed = cfg;
  timed.record_times = true;
  timed.workers = 1;
  auto rows = sweep(timed);
  TimingTable t = timing_table(rows);
  if (results) *results = std::move(rows);
  return t;
}

// ------------------------------------------------------------- statistics

ErrorStats error_stats(std::vector<double> errors) {
  ErrorStats s;
  std::vector<double> ok;
  for (double e : errors) {
    if (std::isnan(e))
      ++s.failed;
    else
      ok.push_back(e);
  }
  s.count = ok.size();
  if (ok.empty()) {
    s.median = s.q1 = s.q3 = s.min = s.max = kNaN;
    return s;
  }
  std::sort(ok.begin(), ok.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(ok.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, ok.size() - 1);
    return ok[lo] + (pos - static_cast<double>(lo)) * (ok[hi] - ok[lo]);
  };
  s.min = ok.front();
  s.max = ok.back();
  s.q1 = q(0.25);
  s.median = q(0.5);
  s.q3 = q(0.75);
  return s;
}

std::vector<GroupStats> group_stats(const std::vector<ConditionResult>& results) {
  std::map<std::tuple<int, double, double>, std::vector<double>> groups;
  for (const auto& r : results) groups[{method_rank(r.method), r.t60_s, -r.diffuse_snr_db}].push_back(r.error_deg);
  std::vector<GroupStats> out;
  for (auto& [key, errs] : groups)
    out.push_back({static_cast<Method>(std::get<0>(key)), std::get<1>(key), -std::get<2>(key), error_stats(errs)});
  return out;
}

// ------------------------------------------------------------------ output

void write_results_csv(const std::string& path, const std::vector<ConditionResult>& results) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "method,t60_s,diffuse_snr_db,realization,speaker,error_deg,bins_selected,time_s\n";
  for (const auto& r : results) {
    if (r.speaker.find_first_of(",\"\n") != std::string::npos)
      throw IoError("speaker label contains a CSV delimiter: " + r.speaker);
    os << method_name(r.method) << ',' << fmt(r.t60_s) << ',' << fmt(r.diffuse_snr_db) << ',' << r.realization << ','
       << r.speaker << ',' << fmt(r.error_deg) << ',' << r.bins_selected << ','
       << (std::isnan(r.time_s) ? std::string() : fmt(r.time_s)) << '\n';
  }
  if (!os) throw IoError("failed writing " + path);
}

std::vector<ConditionResult> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "method,t60_s,diffuse_snr_db,realization,speaker,error_deg,bins_selected,time_s")
    throw IoError(path + ": unexpected header");
  std::vector<ConditionResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 8) throw IoError(path + ": expected 8 fields in '" + line + "'");
    ConditionResult r;
    r.method = parse_method(f[0]);
    r.t60_s = parse_double(f[1]);
    r.diffuse_snr_db = parse_double(f[2]);
    r.realization = std::stoi(f[3]);
    r.speaker = f[4];
    r.error_deg = parse_double(f[5]);
    r.bins_selected = static_cast<std::size_t>(std::stoull(f[6]));
    r.time_s = parse_double(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

void write_sweep_csv(const std::string& path, const std::vector<GroupStats>& stats, bool by_t60, double held) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "method," << (by_t60 ? "t60_s" : "diffuse_snr_db") << ",n,failed,median_deg,q1_deg,q3_deg,min_deg,max_deg\n";
  for (const auto& g : stats) {
    if ((by_t60 ? g.diffuse_snr_db : g.t60_s) != held) continue;
    const auto& s = g.stats;
    os << method_name(g.method) << ',' << fmt(by_t60 ? g.t60_s : g.diffuse_snr_db) << ',' << s.count << ','
       << s.failed << ',' << fmt(s.median) << ',' << fmt(s.q1) << ',' << fmt(s.q3) << ',' << fmt(s.min) << ','
       << fmt(s.max) << '\n';
  }
  if (!os) throw IoError("failed writing " + path);
}

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void emit_results(const std::vector<ConditionResult>& results, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
  if (results.empty()) throw ArgumentError("emit_results: no results");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);

  write_results_csv((dir / "results.csv").string(), results);
  const auto stats = group_stats(results);
  write_sweep_csv((dir / "t60_sweep.csv").string(), stats, true, cfg.t60_sweep_snr_db);
  write_sweep_csv((dir / "snr_sweep.csv").string(), stats, false, cfg.snr_sweep_t60);

  nlohmann::json summary;
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& g : stats) {
    conds.push_back({{"method", method_name(g.method)},
                     {"t60_s", g.t60_s},
                     {"diffuse_snr_db", g.diffuse_snr_db},
                     {"n", g.stats.count},
                     {"failed", g.stats.failed},
                     {"median_deg", num(g.stats.median)},
                     {"q1_deg", num(g.stats.q1)},
                     {"q3_deg", num(g.stats.q3)},
                     {"min_deg", num(g.stats.min)},
                     {"max_deg", num(g.stats.max)}});
  }
  summary["conditions"] = conds;
  const Direction truth = cfg.truth();
  summary["truth"] = {{"theta_deg", truth.theta * 180.0 / kPi}, {"phi_deg", truth.phi * 180.0 / kPi}};
  nlohmann::json scenes = nlohmann::json::array();
  std::vector<double> t60s;
  for (const auto& c : sweep_conditions(cfg)) t60s.push_back(c.t60_s);
  t60s.erase(std::unique(t60s.begin(), t60s.end()), t60s.end());
  for (double t : t60s) {
    const BetaChoice b = scene_beta(cfg, t);
    scenes.push_back({{"t60_s", t},
                      {"beta", b.beta},
                      {"beta_mapping", cfg.beta_mapping},
                      {"sabine_beta", b.sabine_beta},
                      {"sabine_floored", b.sabine_floored},
                      {"calibrated_schroeder_t60_s", b.measured_t60},
                      {"critical_distance_m", t > 0.0 ? critical_distance(cfg.room, t) : 0.0},
                      {"source_distance_m", (cfg.source() - cfg.array_center).norm()},
                      {"rir_duration_s", cfg.rir_duration(t)}});
  }
  summary["scenes"] = scenes;
  summary["config"] = config_to_json(cfg);

  const TimingTable timing = timing_table(results);
  if (!timing.per_condition.empty()) {
    std::ofstream os(dir / "timing.csv", std::ios::binary);
    if (!os) throw IoError("cannot write timing.csv in " + out_dir);
    os << "method,t60_s,diffuse_snr_db,realization,speaker,time_s\n";
    for (const auto& r : results)
      if (!std::isnan(r.time_s))
        os << method_name(r.method) << ',' << fmt(r.t60_s) << ',' << fmt(r.diffuse_snr_db) << ',' << r.realization
           << ',' << r.speaker << ',' << fmt(r.time_s) << '\n';
    nlohmann::json t;
    for (const auto& [m, v] : timing.mean_time_s) t["mean_time_s"][method_name(m)] = v;
    t["thr_dir_ratio"] = num(timing.thr_dir_ratio);
    t["dir_faster_everywhere"] = timing.dir_faster_everywhere;
    summary["timing"] = t;
  }

  std::ofstream js(dir / "summary.json", std::ios::binary);
  if (!js) throw IoError("cannot write summary.json in " + out_dir);
  js << summary.dump(2) << '\n';
}

std::string output_dir(const std::string& fallback) {
  const char* env = std::getenv("SFDOA_OUT_DIR");
  return (env && *env) ? std::string(env) : fallback;
}

}  // namespace sfdoa
