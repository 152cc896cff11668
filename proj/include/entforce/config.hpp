#pragma once

// Flat key = value run configuration.
//
// Sources, later ones overriding earlier ones: built-in defaults, a config
// file (one `key = value` per line, `#` starts a comment), environment
// variables ENTFORCE_<KEY> (key uppercased), command-line flags --<key> with
// underscores written as dashes. Unknown keys are rejected everywhere.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entforce/errors.hpp"
#include "entforce/metrology.hpp"
#include "entforce/oracle.hpp"

namespace entforce {

inline constexpr const char* kEnvPrefix = "ENTFORCE_";

struct RunConfig {
  // probes / entangler
  double omega = 1.0;
  double g_opt = 0.0;
  double beta_abs = 1.0;
  double delta = 1.0;
  std::optional<double> coupling_chi;
  std::optional<double> r;
  std::optional<double> n_th;
  std::optional<double> temperature;
  double hbar_over_kb = 1.0;
  double gamma_mech = 0.0;
  // readout
  std::optional<double> kappa;
  std::optional<double> tau_scaled;
  std::optional<double> phi;  // unset = phi_opt(tau)
  SignalVariant signal_variant = SignalVariant::consistent;
  MeterModel meter_model = MeterModel::quadrature_solution;
  // sweeps
  std::optional<double> axis_lo;
  std::optional<double> axis_hi;
  int points = 512;
  std::optional<bool> log_spaced;
  std::vector<double> r_list{1.0, 2.0, 10.0};
  bool include_sql = true;
  // output and verification
  std::string output;
  std::string gnuplot;
  double tolerance = 1e-6;
  std::optional<double> step;
  int jobs = 1;
  bool full_model = false;
  bool include_printed_signal = false;
};

enum class KeyKind { real, integer, boolean, text };

struct ConfigKey {
  const char* name;
  KeyKind kind;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_plain(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace config_detail

/// Parses a real number. Also accepts multiples of pi written as `pi`,
/// `k*pi`, `pi/m` or `k*pi/m`, which is how angles and scaled times are
/// usually given.
inline double parse_real(const std::string& raw, const std::string& key) {
  const std::string s = config_detail::trim(raw);
  if (auto v = config_detail::parse_plain(s)) return *v;
  const auto at = s.find("pi");
  if (at != std::string::npos) {
    std::string head = s.substr(0, at);
    std::string tail = s.substr(at + 2);
    double k = 1.0, m = 1.0;
    bool ok = true;
    if (!head.empty()) {
      if (head == "-") {
        k = -1.0;
      } else if (head.back() == '*') {
        auto v = config_detail::parse_plain(head.substr(0, head.size() - 1));
        ok = v.has_value();
        if (ok) k = *v;
      } else {
        ok = false;
      }
    }
    if (ok && !tail.empty()) {
      if (tail.front() == '/') {
        auto v = config_detail::parse_plain(tail.substr(1));
        ok = v.has_value() && *v != 0.0;
        if (ok) m = *v;
      } else {
        ok = false;
      }
    }
    if (ok) return k * std::numbers::pi / m;
  }
  throw ConfigError("key '" + key + "': cannot parse '" + raw + "' as a real number");
}

inline int parse_int(const std::string& raw, const std::string& key) {
  const std::string s = config_detail::trim(raw);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("key '" + key + "': cannot parse '" + raw + "' as an integer");
  }
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& raw, const std::string& key) {
  std::string s = config_detail::trim(raw);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': cannot parse '" + raw + "' as a boolean");
}

/// Shortest representation that round-trips through strtod.
inline std::string format_exact(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline const char* to_string(MeterModel m) { return m == MeterModel::heisenberg ? "heisenberg" : "quadrature_solution"; }

inline MeterModel meter_model_from_string(const std::string& s) {
  if (s == "quadrature_solution") return MeterModel::quadrature_solution;
  if (s == "heisenberg") return MeterModel::heisenberg;
  throw ConfigError("unknown meter model '" + s + "' (expected quadrature_solution|heisenberg)");
}

namespace config_detail {

using Get = std::function<std::optional<std::string>(const RunConfig&)>;
using Set = std::function<void(RunConfig&, const std::string&)>;

inline ConfigKey real_key(const char* name, const char* help, double RunConfig::*field) {
  return {name, KeyKind::real, help, [=](RunConfig& c, const std::string& v) { c.*field = parse_real(v, name); },
          [=](const RunConfig& c) -> std::optional<std::string> { return format_exact(c.*field); }};
}

inline ConfigKey opt_real_key(const char* name, const char* help, std::optional<double> RunConfig::*field) {
  return {name, KeyKind::real, help,
          [=](RunConfig& c, const std::string& v) {
            if (trim(v).empty()) {
              (c.*field).reset();
            } else {
              c.*field = parse_real(v, name);
            }
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return format_exact(*(c.*field));
          }};
}

inline ConfigKey int_key(const char* name, const char* help, int RunConfig::*field) {
  return {name, KeyKind::integer, help, [=](RunConfig& c, const std::string& v) { c.*field = parse_int(v, name); },
          [=](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.*field); }};
}

inline ConfigKey bool_key(const char* name, const char* help, bool RunConfig::*field) {
  return {name, KeyKind::boolean, help, [=](RunConfig& c, const std::string& v) { c.*field = parse_bool(v, name); },
          [=](const RunConfig& c) -> std::optional<std::string> { return std::string(c.*field ? "true" : "false"); }};
}

inline ConfigKey text_key(const char* name, const char* help, std::string RunConfig::*field) {
  return {name, KeyKind::text, help, [=](RunConfig& c, const std::string& v) { c.*field = trim(v); },
          [=](const RunConfig& c) -> std::optional<std::string> { return c.*field; }};
}

}  // namespace config_detail

/// Every configurable key, in dump order.
inline const std::vector<ConfigKey>& config_keys() {
  using namespace config_detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(real_key("omega", "mechanical frequency Omega", &RunConfig::omega));
    k.push_back(real_key("g_opt", "optomechanical coupling G of the entangler", &RunConfig::g_opt));
    k.push_back(real_key("beta_abs", "entangler amplitude |beta|", &RunConfig::beta_abs));
    k.push_back(real_key("delta", "entangler detuning Delta", &RunConfig::delta));
    k.push_back(opt_real_key("coupling_chi", "(2 G |beta|)^2 / Delta; overrides g_opt", &RunConfig::coupling_chi));
    k.push_back(opt_real_key("r", "Theta / Omega; overrides g_opt and coupling_chi", &RunConfig::r));
    k.push_back(opt_real_key("n_th", "thermal occupation per probe", &RunConfig::n_th));
    k.push_back(opt_real_key("temperature", "probe temperature; sets n_th from the coth formula", &RunConfig::temperature));
    k.push_back(real_key("hbar_over_kb", "hbar / k_B in the units of omega and temperature", &RunConfig::hbar_over_kb));
    k.push_back(real_key("gamma_mech", "mechanical damping Gamma", &RunConfig::gamma_mech));
    k.push_back(opt_real_key("kappa", "meter strength g gamma / Omega", &RunConfig::kappa));
    k.push_back(opt_real_key("tau_scaled", "scaled force duration Omega tau", &RunConfig::tau_scaled));
    k.push_back(opt_real_key("phi", "probe rotation angle; empty = phi_opt", &RunConfig::phi));
    k.push_back({"signal_variant", KeyKind::text, "consistent | printed",
                 [](RunConfig& c, const std::string& v) { c.signal_variant = signal_variant_from_string(trim(v)); },
                 [](const RunConfig& c) -> std::optional<std::string> { return std::string(to_string(c.signal_variant)); }});
    k.push_back({"meter_model", KeyKind::text, "oracle meter coupling: quadrature_solution | heisenberg",
                 [](RunConfig& c, const std::string& v) { c.meter_model = meter_model_from_string(trim(v)); },
                 [](const RunConfig& c) -> std::optional<std::string> { return std::string(to_string(c.meter_model)); }});
    k.push_back(opt_real_key("axis_lo", "sweep axis lower end", &RunConfig::axis_lo));
    k.push_back(opt_real_key("axis_hi", "sweep axis upper end", &RunConfig::axis_hi));
    k.push_back(int_key("points", "sweep points per axis", &RunConfig::points));
    k.push_back({"log_spaced", KeyKind::boolean, "log-spaced sweep axis",
                 [](RunConfig& c, const std::string& v) {
                   if (trim(v).empty()) {
                     c.log_spaced.reset();
                   } else {
                     c.log_spaced = parse_bool(v, "log_spaced");
                   }
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (!c.log_spaced) return std::nullopt;
                   return std::string(*c.log_spaced ? "true" : "false");
                 }});
    k.push_back({"r_list", KeyKind::text, "comma-separated r values for sweeps",
                 [](RunConfig& c, const std::string& v) {
                   std::vector<double> out;
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) out.push_back(parse_real(item, "r_list"));
                   if (out.empty()) throw ConfigError("key 'r_list': empty list");
                   c.r_list = out;
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   std::string s;
                   for (std::size_t i = 0; i < c.r_list.size(); ++i) s += (i ? "," : "") + format_exact(c.r_list[i]);
                   return s;
                 }});
    k.push_back(bool_key("include_sql", "emit the f_sql column", &RunConfig::include_sql));
    k.push_back(text_key("output", "output path; empty = stdout", &RunConfig::output));
    k.push_back(text_key("gnuplot", "also write a gnuplot script for the CSV here", &RunConfig::gnuplot));
    k.push_back(real_key("tolerance", "relative tolerance of the verification gate", &RunConfig::tolerance));
    k.push_back(opt_real_key("step", "RK4 step; default (2 pi / omega) / 1e4", &RunConfig::step));
    k.push_back(int_key("jobs", "worker threads for sweeps and verification", &RunConfig::jobs));
    k.push_back(bool_key("full_model", "entangle: also integrate the un-eliminated cavity model", &RunConfig::full_model));
    k.push_back(bool_key("include_printed_signal", "verify: also compare the printed signal", &RunConfig::include_printed_signal));
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_config_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const ConfigKey* k = find_config_key(key);
  if (!k) throw ConfigError("unknown configuration key '" + key + "'");
  k->set(cfg, value);
}

inline void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source = "config") {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = config_detail::trim(line.substr(0, eq));
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  apply_config_text(cfg, in, path);
}

inline std::string env_name(const std::string& key) {
  std::string s = kEnvPrefix;
  for (char c : key) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// Applies ENTFORCE_<KEY> overrides. `lookup` defaults to std::getenv.
inline void apply_environment(RunConfig& cfg,
                              const std::function<const char*(const char*)>& lookup = [](const char* n) {
                                return std::getenv(n);
                              }) {
  for (const auto& k : config_keys()) {
    const std::string name = env_name(k.name);
    if (const char* v = lookup(name.c_str())) {
      try {
        k.set(cfg, v);
      } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
      }
    }
  }
}

/// Re-parseable listing of the configuration. Unset optional keys are
/// written as comments so the listing documents every key.
inline std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : config_keys()) {
    if (auto v = k.get(cfg)) {
      out += std::string(k.name) + " = " + *v + "\n";
    } else {
      out += std::string("# ") + k.name + " =   (unset: " + k.help + ")\n";
    }
  }
  return out;
}

}  // namespace entforce
