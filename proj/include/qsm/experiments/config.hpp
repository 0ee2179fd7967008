#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qsm/error.hpp"
#include "qsm/experiments/io.hpp"

namespace qsm::experiments {

// Flat `key = value` text configuration.  '#' starts a comment; lists are
// comma separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<config>") {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::config_error, origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(t.substr(0, eq));
      if (key.empty()) throw Error(ErrorCode::config_error, origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = trim(t.substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config_error, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
  }

  long get_int(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_int(key, it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::config_error, key + ": expected a boolean, got '" + v + "'");
  }

  std::vector<long> get_int_list(const std::string& key, const std::vector<long>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<long> out;
    for (const auto& item : split(it->second)) out.push_back(to_int(key, item));
    if (out.empty()) throw Error(ErrorCode::config_error, key + ": empty list");
    return out;
  }

  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto& item : split(it->second)) out.push_back(to_double(key, item));
    if (out.empty()) throw Error(ErrorCode::config_error, key + ": empty list");
    return out;
  }

  // Keys not in `known`, for typo detection.
  std::vector<std::string> unknown_keys(const std::set<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!known.count(k)) out.push_back(k);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw Error(ErrorCode::config_error, key + ": expected a number, got '" + v + "'");
    }
    return x;
  }

  static long to_int(const std::string& key, const std::string& v) {
    long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw Error(ErrorCode::config_error, key + ": expected an integer, got '" + v + "'");
    }
    return x;
  }

  std::map<std::string, std::string> values_;
};

// Typed settings shared by every scenario.  `k_scale = break` makes the k grid
// relative to k_break(N) (used by the IPR scan).
struct ScanConfig {
  std::string experiment;
  std::vector<long> N_list{158};
  double k = 0.5;  // single-k scenarios
  double k_min = 0.006;
  double k_max = 1.8;
  long k_steps = 300;
  std::string k_scale = "absolute";
  long window = 11;
  std::string output_dir = "qsm-out";
  double intensity_threshold = 5e-3;
  double intensity_floor = 5e-6;
  double neighbor_ratio = 0.05;
  long top_m = 6;
  long husimi_grid = 100;
  double residual_tol = 1e-10;
  double classical_tol = 1e-9;
  double arc_length = 6.0;
  double x_min = -8.0;
  double x_max = 8.0;
  double x_step = 0.1;
  bool include_long = false;
  long threads = 0;  // 0 = hardware concurrency

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "experiment", "N",      "k",         "k_min",       "k_max",         "k_steps",
        "k_scale",    "window", "output_dir", "intensity_threshold", "intensity_floor", "neighbor_ratio",
        "top_m",      "husimi_grid", "residual_tol", "classical_tol", "arc_length", "x_min",
        "x_max",      "x_step", "include_long", "threads"};
    return keys;
  }

  // Defaults of each scenario before user overrides.
  static ScanConfig defaults(const std::string& experiment) {
    ScanConfig c;
    c.experiment = experiment;
    if (experiment == "spacing") {
      c.N_list = {158, 1026};
    } else if (experiment == "ipr-scan") {
      c.N_list = {200, 400, 1000};
      c.k_scale = "break";
      c.k_min = 0.01;
      c.k_max = 1.5;
      c.k_steps = 150;
    } else if (experiment == "phase-diagram") {
      c.N_list = {50, 100, 158, 200, 400, 1000, 3000, 10000, 62900};
    } else if (experiment == "homoclinic") {
      c.k_min = 0.3;
      c.k_max = 1.8;
      c.k_steps = 10;
    }
    return c;
  }

  static ScanConfig from(const std::string& experiment, const KeyValueConfig& kv) {
    if (const auto unknown = kv.unknown_keys(known_keys()); !unknown.empty()) {
      throw Error(ErrorCode::config_error, "unknown config key '" + unknown.front() + "'");
    }
    if (kv.has("experiment") && kv.get_string("experiment", "") != experiment) {
      throw Error(ErrorCode::config_error, "config is for experiment '" + kv.get_string("experiment", "") +
                                               "', not '" + experiment + "'");
    }
    ScanConfig c = defaults(experiment);
    c.N_list = kv.get_int_list("N", c.N_list);
    c.k = kv.get_double("k", c.k);
    c.k_min = kv.get_double("k_min", c.k_min);
    c.k_max = kv.get_double("k_max", c.k_max);
    c.k_steps = kv.get_int("k_steps", c.k_steps);
    c.k_scale = kv.get_string("k_scale", c.k_scale);
    c.window = kv.get_int("window", c.window);
    c.output_dir = kv.get_string("output_dir", c.output_dir);
    c.intensity_threshold = kv.get_double("intensity_threshold", c.intensity_threshold);
    c.intensity_floor = kv.get_double("intensity_floor", c.intensity_floor);
    c.neighbor_ratio = kv.get_double("neighbor_ratio", c.neighbor_ratio);
    c.top_m = kv.get_int("top_m", c.top_m);
    c.husimi_grid = kv.get_int("husimi_grid", c.husimi_grid);
    c.residual_tol = kv.get_double("residual_tol", c.residual_tol);
    c.classical_tol = kv.get_double("classical_tol", c.classical_tol);
    c.arc_length = kv.get_double("arc_length", c.arc_length);
    c.x_min = kv.get_double("x_min", c.x_min);
    c.x_max = kv.get_double("x_max", c.x_max);
    c.x_step = kv.get_double("x_step", c.x_step);
    c.include_long = kv.get_bool("include_long", c.include_long);
    c.threads = kv.get_int("threads", c.threads);
    c.validate();
    return c;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::config_error, m); };
    if (N_list.empty()) fail("N list is empty");
    for (long n : N_list)
      if (n < 2) fail("every N must be >= 2");
    if (k_steps < 1) fail("k_steps must be >= 1");
    if (k_steps > 1 && !(k_max > k_min)) fail("k grid must be strictly increasing (k_max > k_min)");
    if (k_min < 0.0) fail("k_min must be >= 0");
    if (k_scale != "absolute" && k_scale != "break") fail("k_scale must be 'absolute' or 'break'");
    if (window < 1 || window % 2 == 0) fail("window must be odd and >= 1");
    if (!(intensity_threshold > 0.0) || !(intensity_floor > 0.0)) fail("intensity thresholds must be positive");
    if (!(neighbor_ratio >= 0.0 && neighbor_ratio < 1.0)) fail("neighbor_ratio must lie in [0, 1)");
    if (top_m < 1 || top_m > 12) fail("top_m must lie in 1..12");
    if (husimi_grid < 16) fail("husimi_grid must be >= 16");
    if (!(residual_tol > 0.0) || !(classical_tol > 0.0)) fail("tolerances must be positive");
    if (!(arc_length > 0.0)) fail("arc_length must be positive");
    if (!(x_max > x_min) || !(x_step > 0.0)) fail("x grid must be increasing with positive step");
    if (threads < 0) fail("threads must be >= 0");
    if (output_dir.empty()) fail("output_dir is empty");
  }

  std::vector<double> k_grid() const {
    std::vector<double> ks(k_steps);
    for (long i = 0; i < k_steps; ++i)
      ks[i] = k_steps == 1 ? k_min : k_min + (k_max - k_min) * static_cast<double>(i) / (k_steps - 1);
    return ks;
  }

  std::map<std::string, std::string> echo() const {
    std::string ns;
    for (std::size_t i = 0; i < N_list.size(); ++i) ns += (i ? "," : "") + std::to_string(N_list[i]);
    return {{"experiment", experiment},
            {"N", ns},
            {"k", format_double(k)},
            {"k_min", format_double(k_min)},
            {"k_max", format_double(k_max)},
            {"k_steps", std::to_string(k_steps)},
            {"k_scale", k_scale},
            {"window", std::to_string(window)},
            {"output_dir", output_dir},
            {"intensity_threshold", format_double(intensity_threshold)},
            {"intensity_floor", format_double(intensity_floor)},
            {"neighbor_ratio", format_double(neighbor_ratio)},
            {"top_m", std::to_string(top_m)},
            {"husimi_grid", std::to_string(husimi_grid)},
            {"residual_tol", format_double(residual_tol)},
            {"classical_tol", format_double(classical_tol)},
            {"arc_length", format_double(arc_length)},
            {"x_min", format_double(x_min)},
            {"x_max", format_double(x_max)},
            {"x_step", format_double(x_step)},
            {"include_long", include_long ? "true" : "false"},
            {"threads", std::to_string(threads)}};
  }
};

}  // namespace qsm::experiments
