#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "rslam/core.hpp"
#include "rslam/geometry.hpp"

namespace rslam {

enum class PoseMethod { fm, sfm, lsm };

inline const char* to_string(PoseMethod m) {
  switch (m) {
    case PoseMethod::fm: return "fm";
    case PoseMethod::sfm: return "sfm";
    case PoseMethod::lsm: return "lsm";
  }
  return "?";
}

inline PoseMethod parse_pose_method(const std::string& s) {
  if (s == "fm") return PoseMethod::fm;
  if (s == "sfm") return PoseMethod::sfm;
  if (s == "lsm") return PoseMethod::lsm;
  throw Error("config", "unknown pose estimator '" + s + "' (expected fm, sfm or lsm)");
}

struct PipelineConfig {
  // preprocessing
  double eta_cl = 0.4;
  double eta_cf = 1e-2;
  double eta_sv = 0.9;

  // registration
  PoseMethod pose = PoseMethod::sfm;
  double cell_size = 0.02;
  std::size_t image_size = 1024;
  bool hann_window = true;
  bool subpixel = false;
  int search_x = 25;
  int search_y = 25;
  int search_theta = 15;
  double lsm_sigma = 0.05;

  // tracker
  double t_f = 1.0;
  double w0 = 1e-4;
  double w_theta = 1e-4;
  double sigma_x = 4.7e-3;
  double sigma_y = 4.7e-3;
  double sigma_theta = 1.7e-3;
  double q_min = 1e-2;

  // map
  double map_origin_x = -8.0;
  double map_origin_y = -8.0;
  double map_cell_size = 0.05;
  std::size_t map_width = 320;
  std::size_t map_height = 320;
  double p_hit = 0.9;
  double log_odds_clamp = 10.0;
  bool free_evidence = true;
  double threshold_occupied = 2.0;
  double threshold_free = -2.0;

  // files
  std::string input_dir;
  std::string output_dir = "out";
  std::string ground_truth;  // empty: look for ground_truth.csv in input_dir

  bool operator==(const PipelineConfig&) const = default;

  void validate() const {
    const auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
    require(unit(eta_cl) && unit(eta_cf) && unit(eta_sv), "config", "thresholds must lie in (0, 1]");
    require(cell_size > 0.0 && map_cell_size > 0.0, "config", "cell sizes must be positive");
    require(image_size >= 2 && image_size % 2 == 0, "config", "image size must be even");
    require(search_x >= 0 && search_y >= 0 && search_theta >= 0, "config", "search window must be nonnegative");
    require(t_f > 0.0 && w0 >= 0.0 && w_theta >= 0.0, "config", "invalid motion model");
    require(sigma_x > 0.0 && sigma_y > 0.0 && sigma_theta > 0.0 && q_min > 0.0, "config", "invalid observation model");
    require(map_width > 0 && map_height > 0, "config", "map must have at least one cell");
    require(p_hit > 0.5 && p_hit < 1.0, "config", "p_hit must lie in (0.5, 1)");
    require(threshold_free <= threshold_occupied, "config", "free threshold above occupied threshold");
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw Error("config", "bad value for " + key + ": '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config", "bad boolean for " + key + ": '" + v + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// One accessor per key so parsing and serialising share a single table.
struct Field {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

template <typename T>
Field number(T PipelineConfig::*m, const char* key) {
  return {[m, key](PipelineConfig& c, const std::string& v) { c.*m = parse_number<T>(key, v); },
          [m](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(c.*m);
            else return std::to_string(c.*m);
          }};
}

inline Field flag(bool PipelineConfig::*m, const char* key) {
  return {[m, key](PipelineConfig& c, const std::string& v) { c.*m = parse_bool(key, v); },
          [m](const PipelineConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

inline Field text(std::string PipelineConfig::*m) {
  return {[m](PipelineConfig& c, const std::string& v) { c.*m = v; }, [m](const PipelineConfig& c) { return c.*m; }};
}

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"eta_cl", number(&PipelineConfig::eta_cl, "eta_cl")},
      {"eta_cf", number(&PipelineConfig::eta_cf, "eta_cf")},
      {"eta_sv", number(&PipelineConfig::eta_sv, "eta_sv")},
      {"pose", {[](PipelineConfig& c, const std::string& v) { c.pose = parse_pose_method(v); },
                [](const PipelineConfig& c) { return std::string(to_string(c.pose)); }}},
      {"cell_size", number(&PipelineConfig::cell_size, "cell_size")},
      {"image_size", number(&PipelineConfig::image_size, "image_size")},
      {"hann_window", flag(&PipelineConfig::hann_window, "hann_window")},
      {"subpixel", flag(&PipelineConfig::subpixel, "subpixel")},
      {"search_x", number(&PipelineConfig::search_x, "search_x")},
      {"search_y", number(&PipelineConfig::search_y, "search_y")},
      {"search_theta", number(&PipelineConfig::search_theta, "search_theta")},
      {"lsm_sigma", number(&PipelineConfig::lsm_sigma, "lsm_sigma")},
      {"t_f", number(&PipelineConfig::t_f, "t_f")},
      {"w0", number(&PipelineConfig::w0, "w0")},
      {"w_theta", number(&PipelineConfig::w_theta, "w_theta")},
      {"sigma_x", number(&PipelineConfig::sigma_x, "sigma_x")},
      {"sigma_y", number(&PipelineConfig::sigma_y, "sigma_y")},
      {"sigma_theta", number(&PipelineConfig::sigma_theta, "sigma_theta")},
      {"q_min", number(&PipelineConfig::q_min, "q_min")},
      {"map_origin_x", number(&PipelineConfig::map_origin_x, "map_origin_x")},
      {"map_origin_y", number(&PipelineConfig::map_origin_y, "map_origin_y")},
      {"map_cell_size", number(&PipelineConfig::map_cell_size, "map_cell_size")},
      {"map_width", number(&PipelineConfig::map_width, "map_width")},
      {"map_height", number(&PipelineConfig::map_height, "map_height")},
      {"p_hit", number(&PipelineConfig::p_hit, "p_hit")},
      {"log_odds_clamp", number(&PipelineConfig::log_odds_clamp, "log_odds_clamp")},
      {"free_evidence", flag(&PipelineConfig::free_evidence, "free_evidence")},
      {"threshold_occupied", number(&PipelineConfig::threshold_occupied, "threshold_occupied")},
      {"threshold_free", number(&PipelineConfig::threshold_free, "threshold_free")},
      {"input_dir", text(&PipelineConfig::input_dir)},
      {"output_dir", text(&PipelineConfig::output_dir)},
      {"ground_truth", text(&PipelineConfig::ground_truth)},
  };
  return table;
}

}  // namespace detail

/// Set one key; unknown keys are an error.
inline void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto& f = detail::fields();
  const auto it = f.find(key);
  if (it == f.end()) throw Error("config", "unknown key '" + key + "'");
  it->second.set(cfg, value);
}

/// key=value per line; '#' starts a comment. Keys not given keep defaults.
inline PipelineConfig parse_config(std::istream& is, PipelineConfig cfg = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config", "line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path, PipelineConfig cfg = {}) {
  std::ifstream is(path);
  if (!is) throw Error("config", "cannot open " + path);
  return parse_config(is, std::move(cfg));
}

inline void write_config(std::ostream& os, const PipelineConfig& cfg) {
  for (const auto& [key, field] : detail::fields()) os << key << '=' << field.get(cfg) << '\n';
}

inline std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

}  // namespace rslam
