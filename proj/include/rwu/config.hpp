#pragma once

// Flat key=value experiment configuration. Files may be earlier CSV outputs:
// "#! key=value" header lines are read as entries, other "#" lines are
// skipped, and parsing stops at the first data line.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rwu/errors.hpp"
#include "rwu/version.hpp"

namespace rwu {

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"sample-stable",    "estimate-constants", "ustat-transient",
                                          "ustat-planar",     "ustat-localtime",    "sheet-integrals",
                                          "point-process",    "validate-kernel"};
  return s;
}

struct KeyInfo {
  std::string key;
  std::string fallback;
  std::string help;
};

// Every accepted key with its default. Subcommand-specific defaults are
// applied on top by defaults_for().
inline const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> k{
      {"seed", "1", "master seed"},
      {"replicates", "100", "replicate count"},
      {"out", ".", "output directory"},
      {"workers", "1", "worker threads"},
      {"walk", "deterministic", "deterministic | simple | heavy"},
      {"d0", "1", "lattice dimension of the simple walk"},
      {"alpha", "1.5", "index of the heavy-step walk"},
      {"kernel", "power", "power | signed-power | reciprocal-sum"},
      {"p", "1", "scenery dimension"},
      {"beta", "0.8", "tail index"},
      {"density", "uniform", "uniform | gaussian"},
      {"density_lo", "0", "uniform density lower edge"},
      {"density_hi", "1", "uniform density upper edge"},
      {"sigma", "1", "gaussian density scale"},
      {"radius", "10", "gaussian density truncation radius"},
      {"c0", "derived", "right tail constant (number or 'derived')"},
      {"c1", "derived", "left tail constant (number or 'derived')"},
      {"n", "1000", "walk length scale"},
      {"time_grid", "1", "comma-separated times"},
      {"thetas", "1", "comma-separated theta values, one per time"},
      {"K_beta", "estimate", "K_beta value or 'estimate'"},
      {"horizon", "10000", "path horizon for the K_beta estimate"},
      {"k_replicates", "10000", "paths for the K_beta estimate"},
      {"c3", "3.141592653589793", "range constant c3 or 'estimate'"},
      {"z_grid", "standard", "comma-separated z values or 'standard'"},
      {"betas", "0.7,1,1.3", "stability indices for sample-stable"},
      {"A", "1", "scale coefficient for sample-stable"},
      {"samples", "100000", "draws per law / per delta"},
      {"cell_size", "0.5", "sheet cell size"},
      {"extent", "4", "sheet cells per axis and quadrant"},
      {"mode", "quenched", "point-process mode: quenched | annealed"},
      {"intervals", "1:2,2:4,4:inf", "comma-separated lo:hi intervals"},
      {"a", "1", "right intensity weight for the Poisson limit"},
      {"b", "0", "left intensity weight for the Poisson limit"},
      {"deltas", "0.3,0.1,0.03,0.01", "truncation levels"},
  };
  return k;
}

inline std::map<std::string, std::string> defaults_for(const std::string& sub) {
  std::map<std::string, std::string> d;
  for (const auto& k : known_keys()) d[k.key] = k.fallback;
  if (sub == "ustat-transient") {
    d["walk"] = "simple";
    d["d0"] = "3";
  } else if (sub == "ustat-planar") {
    d["walk"] = "simple";
    d["d0"] = "2";
  } else if (sub == "ustat-localtime") {
    d["walk"] = "simple";
    d["d0"] = "1";
  } else if (sub == "sheet-integrals") {
    d["beta"] = "0.7";
    d["c0"] = "1.5";
    d["c1"] = "0.5";
  } else if (sub == "point-process") {
    d["beta"] = "0.5";
    d["n"] = "200";
  } else if (sub == "estimate-constants") {
    d["walk"] = "simple";
    d["d0"] = "3";
  }
  return d;
}

struct ExperimentConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;

  const std::string& get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing key " + key);
    return it->second;
  }

  double number(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ConfigError(key + ": not a number: " + s);
    return v;
  }

  std::int64_t integer(const std::string& key) const {
    const std::string& s = get(key);
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      // Accept integral values written as floats, e.g. 1e5.
      const double d = number(key);
      if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError(key + ": not an integer: " + s);
      return static_cast<std::int64_t>(d);
    }
    return v;
  }

  std::uint64_t seed() const {
    const std::string& s = get("seed");
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ConfigError("seed: not an unsigned integer: " + s);
    return v;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      ExperimentConfig tmp;
      tmp.values[key] = item;
      out.push_back(tmp.number(key));
    }
    return out;
  }
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("#!", 0) == 0) {
      t = trim(std::string_view(t).substr(2));
    } else if (t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) break;  // first data line of a CSV
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

inline std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse_config_text(in);
}

// Defaults, then `file` entries, then `overrides`. Unknown keys are errors.
inline ExperimentConfig make_config(const std::string& sub, const std::map<std::string, std::string>& file,
                                    const std::map<std::string, std::string>& overrides) {
  bool known_sub = false;
  for (const auto& s : subcommands()) known_sub = known_sub || s == sub;
  if (!known_sub) throw ConfigError("unknown subcommand " + sub);
  ExperimentConfig c;
  c.subcommand = sub;
  c.values = defaults_for(sub);
  for (const auto* src : {&file, &overrides})
    for (const auto& [k, v] : *src) {
      if (k == "subcommand") {
        if (v != sub) throw ConfigError("config is for subcommand " + v + ", not " + sub);
        continue;
      }
      if (!c.values.count(k)) throw ConfigError("unknown key " + k);
      c.values[k] = v;
    }
  return c;
}

// Comment header carried by every output file. `out` and `workers` are left
// out: they do not affect the numbers.
inline void write_header(std::ostream& os, const ExperimentConfig& c) {
  os << "# " << kVersion << '\n';
  os << "# seed=" << c.get("seed") << '\n';
  os << "#! subcommand=" << c.subcommand << '\n';
  for (const auto& [k, v] : c.values)
    if (k != "out" && k != "workers") os << "#! " << k << '=' << v << '\n';
}

}  // namespace rwu
