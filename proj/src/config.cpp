#include "sfdoa/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sfdoa/errors.hpp"

namespace sfdoa {

using nlohmann::json;

std::string method_name(Method m) {
  switch (m) {
    case Method::ThrGmm: return "THR-GMM";
    case Method::DirGmm: return "DIR-GMM";
    case Method::GccPhat: return "GCC-PHAT";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string up = s;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Method m : {Method::ThrGmm, Method::DirGmm, Method::GccPhat})
    if (up == method_name(m)) return m;
  throw ConfigurationError("unknown method '" + s + "' (expected THR-GMM, DIR-GMM or GCC-PHAT)");
}

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d to_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigurationError(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void reject_unknown(const json& given, const json& reference, const std::string& path) {
  if (!given.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!reference.contains(it.key())) throw ConfigurationError("unknown configuration key '" + key + "'");
    if (reference[it.key()].is_object()) reject_unknown(it.value(), reference[it.key()], key);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

nlohmann::json config_to_json(const ExperimentConfig& c) {
  json j;
  j["room"] = {{"dimensions", vec3(c.room.dimensions)}, {"speed_of_sound", c.room.speed_of_sound}, {"fs", c.room.fs}, {"beta_mapping", c.beta_mapping}};
  j["t60_list"] = c.t60_list;
  j["t60_sweep_snr_db"] = c.t60_sweep_snr_db;
  j["snr_list"] = c.snr_list;
  j["snr_sweep_t60"] = c.snr_sweep_t60;
  j["sensor_snr_db"] = c.sensor_snr_db;
  j["speakers"] = c.speakers;
  j["synthetic_duration_s"] = c.synthetic_duration_s;
  j["geometry"] = {{"array_center", vec3(c.array_center)},
                   {"source_distance", c.source_distance},
                   {"source_theta_deg", c.source_theta_deg},
                   {"source_phi_deg", c.source_phi_deg},
                   {"source_position", c.source_position ? vec3(*c.source_position) : json(nullptr)}};
  j["array"] = {{"radius", c.array_radius}, {"order", c.array_order}};
  j["stft"] = {{"fft_size", c.stft.fft_size}, {"hop", c.stft.hop}};
  j["band"] = {{"f_low", c.band_f_low}};
  j["reg_max_gain_db"] = c.reg_max_gain_db;
  j["thr"] = {{"th", c.thr.th}, {"T", c.thr.T}, {"F", c.thr.F}};
  j["dir"] = {{"alpha", c.dir.alpha}};
  j["gmm"] = {{"enabled", c.use_gmm},
              {"components", c.gmm.components},
              {"max_iterations", c.gmm.max_iterations},
              {"tolerance", c.gmm.tolerance},
              {"variance_floor", c.gmm.variance_floor}};
  j["grid"] = {{"resolution_deg", c.grid_resolution_deg},
               {"search", c.search == SearchMode::Hierarchical ? "hierarchical" : "exhaustive"}};
  j["gcc"] = {{"mics", c.gcc_mics}, {"frame", c.gcc_frame}, {"hop", c.gcc_hop}, {"interp", c.gcc_interp}};
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["realizations"] = c.realizations;
  j["master_seed"] = c.master_seed;
  j["rir_duration_s"] = c.rir_duration_s;
  j["workers"] = c.workers;
  j["record_times"] = c.record_times;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigurationError("configuration must be a JSON object");
  ExperimentConfig c;
  reject_unknown(j, config_to_json(c), "");
  try {
    if (j.contains("room")) {
      const auto& r = j["room"];
      if (r.contains("dimensions")) c.room.dimensions = to_vec3(r["dimensions"], "room.dimensions");
      read(r, "speed_of_sound", c.room.speed_of_sound);
      read(r, "fs", c.room.fs);
      read(r, "beta_mapping", c.beta_mapping);
    }
    read(j, "t60_list", c.t60_list);
    read(j, "t60_sweep_snr_db", c.t60_sweep_snr_db);
    read(j, "snr_list", c.snr_list);
    read(j, "snr_sweep_t60", c.snr_sweep_t60);
    read(j, "sensor_snr_db", c.sensor_snr_db);
    read(j, "speakers", c.speakers);
    read(j, "synthetic_duration_s", c.synthetic_duration_s);
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      if (g.contains("array_center")) c.array_center = to_vec3(g["array_center"], "geometry.array_center");
      read(g, "source_distance", c.source_distance);
      read(g, "source_theta_deg", c.source_theta_deg);
      read(g, "source_phi_deg", c.source_phi_deg);
      if (g.contains("source_position") && !g["source_position"].is_null())
        c.source_position = to_vec3(g["source_position"], "geometry.source_position");
    }
    if (j.contains("array")) {
      read(j["array"], "radius", c.array_radius);
      read(j["array"], "order", c.array_order);
    }
    if (j.contains("stft")) {
      read(j["stft"], "fft_size", c.stft.fft_size);
      read(j["stft"], "hop", c.stft.hop);
    }
    if (j.contains("band")) read(j["band"], "f_low", c.band_f_low);
    read(j, "reg_max_gain_db", c.reg_max_gain_db);
    if (j.contains("thr")) {
      read(j["thr"], "th", c.thr.th);
      read(j["thr"], "T", c.thr.T);
      read(j["thr"], "F", c.thr.F);
    }
    if (j.contains("dir")) read(j["dir"], "alpha", c.dir.alpha);
    if (j.contains("gmm")) {
      const auto& g = j["gmm"];
      read(g, "enabled", c.use_gmm);
      read(g, "components", c.gmm.components);
      read(g, "max_iterations", c.gmm.max_iterations);
      read(g, "tolerance", c.gmm.tolerance);
      read(g, "variance_floor", c.gmm.variance_floor);
    }
    if (j.contains("grid")) {
      read(j["grid"], "resolution_deg", c.grid_resolution_deg);
      if (j["grid"].contains("search")) {
        const auto s = j["grid"]["search"].get<std::string>();
        if (s == "hierarchical")
          c.search = SearchMode::Hierarchical;
        else if (s == "exhaustive")
          c.search = SearchMode::Exhaustive;
        else
          throw ConfigurationError("grid.search must be 'hierarchical' or 'exhaustive'");
      }
    }
    if (j.contains("gcc")) {
      const auto& g = j["gcc"];
      read(g, "mics", c.gcc_mics);
      read(g, "frame", c.gcc_frame);
      read(g, "hop", c.gcc_hop);
      read(g, "interp", c.gcc_interp);
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    read(j, "realizations", c.realizations);
    read(j, "master_seed", c.master_seed);
    read(j, "rir_duration_s", c.rir_duration_s);
    read(j, "workers", c.workers);
    read(j, "record_times", c.record_times);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open configuration " + path);
  json j;
  try {
    j = json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigurationError("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigurationError("empty key in override '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void ExperimentConfig::validate() const {
  room.validate();
  if (beta_mapping != "calibrated" && beta_mapping != "sabine")
    throw ConfigurationError("room.beta_mapping must be 'calibrated' or 'sabine'");
  if (t60_list.empty() || snr_list.empty()) throw ConfigurationError("T60 and SNR lists must be nonempty");
  for (double t : t60_list)
    if (!(t >= 0.0)) throw ConfigurationError("T60 values must be non-negative");
  if (!(snr_sweep_t60 >= 0.0)) throw ConfigurationError("snr_sweep_t60 must be non-negative");
  if (speakers.empty()) throw ConfigurationError("at least one speaker is required");
  for (const auto& s : speakers)
    if (s.rfind("synthetic:", 0) != 0 && !std::filesystem::exists(s))
      throw ConfigurationError("speaker file not found: " + s);
  if (!(synthetic_duration_s > 0.0)) throw ConfigurationError("synthetic_duration_s must be positive");
  if (realizations < 1) throw ConfigurationError("realizations must be at least 1");
  if (workers < 1) throw ConfigurationError("workers must be at least 1");
  if (methods.empty()) throw ConfigurationError("no methods selected");
  if (!(grid_resolution_deg >= 0.1 && grid_resolution_deg <= 10.0))
    throw ConfigurationError("grid resolution must lie in [0.1, 10] degrees");
  if (gcc_interp < 1 || gcc_frame < 16 || gcc_hop == 0) throw ConfigurationError("bad GCC parameters");
  if (stft.fft_size < 16 || stft.hop == 0 || stft.hop > stft.fft_size) throw ConfigurationError("bad STFT parameters");
  if (gmm.components < 1 || gmm.max_iterations < 1) throw ConfigurationError("bad GMM parameters");
  thr.validate(array_order);
  dir.validate(array_order);
  array().validate();
  const Eigen::Vector3d src = source();
  if (!room.contains(src)) throw ConfigurationError("source position is outside the room");
  for (const auto& p : array().positions(array_center))
    if (!room.contains(p)) throw ConfigurationError("array does not fit inside the room");
  if ((src - array_center).norm() <= array_radius) throw ConfigurationError("source lies inside the array");
}

Eigen::Vector3d ExperimentConfig::source() const {
  if (source_position) return *source_position;
  const Direction d{source_theta_deg * kPi / 180.0, source_phi_deg * kPi / 180.0};
  return array_center + source_distance * d.unit_vector();
}

Direction ExperimentConfig::truth() const { return Direction::from_vector(source() - array_center); }

ArrayConfig ExperimentConfig::array() const {
  ArrayConfig a = default_array_geometry();
  a.radius = array_radius;
  a.order = array_order;
  return a;
}

double ExperimentConfig::rir_duration(double t60) const {
  return rir_duration_s > 0.0 ? rir_duration_s : std::max(0.1, t60);
}

}  // namespace sfdoa
