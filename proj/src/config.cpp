#include "treecast/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <type_traits>

#include "treecast/errors.hpp"
#include "treecast/format.hpp"

namespace treecast {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || text.empty()) {
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

template <class Int>
Int to_int(const std::string& key, const std::string& text) {
  // Accept integral values written in floating notation (pool=1e6).
  const double v = to_double(key, text);
  if (!std::isfinite(v) || v != std::trunc(v) ||
      (v < 0 && !std::is_signed_v<Int>) || std::abs(v) > 9.007199254740992e15) {
    throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
  }
  return static_cast<Int>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + text + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& text, F&& parse_one) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_one(trim(item)));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Exact: return "exact";
    case Mode::De: return "de";
    case Mode::Bp: return "bp";
    case Mode::Gfunc: return "gfunc";
    case Mode::Threshold: return "threshold";
    case Mode::Sweep: return "sweep";
    case Mode::Check: break;
  }
  return "check";
}

Mode parse_mode(const std::string& text) {
  static const std::map<std::string, Mode> modes{
      {"exact", Mode::Exact},         {"de", Mode::De},
      {"bp", Mode::Bp},               {"gfunc", Mode::Gfunc},
      {"threshold", Mode::Threshold}, {"sweep", Mode::Sweep},
      {"check", Mode::Check}};
  const auto it = modes.find(text);
  if (it == modes.end()) throw ConfigError("unknown mode '" + text + "'");
  return it->second;
}

void RunConfig::set(const std::string& raw_key, const std::string& raw) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string value = trim(raw);
  if (key == "mode") {
    mode = parse_mode(value);
  } else if (key == "pi1") {
    pi1 = to_double(key, value);
  } else if (key == "theta") {
    theta = to_double(key, value);
    d_theta_sq.reset();
  } else if (key == "d_theta_sq") {
    d_theta_sq = to_double(key, value);
    theta.reset();
  } else if (key == "theta_sign") {
    theta_sign = to_int<int>(key, value);
    if (theta_sign != 1 && theta_sign != -1) {
      throw ConfigError("theta_sign must be 1 or -1");
    }
  } else if (key == "d") {
    d = to_int<int>(key, value);
  } else if (key == "n_max" || key == "n") {
    n_max = to_int<int>(key, value);
  } else if (key == "pool") {
    pool = to_int<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = to_int<std::uint64_t>(key, value);
  } else if (key == "quad_order") {
    quad_order = to_int<int>(key, value);
  } else if (key == "tol") {
    tol = to_double(key, value);
  } else if (key == "out") {
    out = value;
  } else if (key == "max_configurations") {
    max_configurations = to_double(key, value);
  } else if (key == "eps_zero") {
    eps_zero = to_double(key, value);
  } else if (key == "window") {
    window = to_int<int>(key, value);
  } else if (key == "recenter") {
    recenter = to_bool(key, value);
  } else if (key == "num_trees") {
    num_trees = to_int<std::size_t>(key, value);
  } else if (key == "grid_points") {
    grid_points = to_int<int>(key, value);
  } else if (key == "s_max") {
    s_max = to_double(key, value);
  } else if (key == "grid_size") {
    grid_size = to_int<int>(key, value);
  } else if (key == "threshold_d") {
    threshold_d = to_list<int>(value, [&](const std::string& s) {
      return to_int<int>(key, s);
    });
  } else if (key == "sweep_pi1") {
    sweep_pi1 = to_list<double>(value, [&](const std::string& s) {
      return to_double(key, s);
    });
  } else if (key == "sweep_d_theta_sq") {
    sweep_d_theta_sq = to_list<double>(value, [&](const std::string& s) {
      return to_double(key, s);
    });
  } else {
    throw ConfigError("unknown config key '" + raw_key + "'");
  }
}

int RunConfig::effective_n_max() const {
  if (n_max) return *n_max;
  switch (mode) {
    case Mode::De: return 50;
    case Mode::Sweep: return 60;
    default: return 3;
  }
}

ModelParams RunConfig::model() const {
  if (d_theta_sq) {
    return ModelParams::from_d_theta_sq(pi1, *d_theta_sq, d, theta_sign);
  }
  return ModelParams::from_pi_theta(pi1, theta.value_or(0.7), d);
}

std::string RunConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  kv["mode"] = to_string(mode);
  kv["pi1"] = format_double(pi1);
  if (d_theta_sq) {
    kv["d_theta_sq"] = format_double(*d_theta_sq);
    kv["theta_sign"] = std::to_string(theta_sign);
  } else {
    kv["theta"] = format_double(theta.value_or(0.7));
  }
  kv["d"] = std::to_string(d);
  kv["n_max"] = std::to_string(effective_n_max());
  kv["pool"] = std::to_string(pool);
  kv["seed"] = std::to_string(seed);
  kv["quad_order"] = std::to_string(quad_order);
  kv["tol"] = format_double(tol);
  kv["max_configurations"] = format_double(max_configurations);
  kv["eps_zero"] = format_double(eps_zero);
  kv["window"] = std::to_string(window);
  kv["recenter"] = recenter ? "true" : "false";
  kv["num_trees"] = std::to_string(num_trees);
  kv["grid_points"] = std::to_string(grid_points);
  kv["s_max"] = s_max ? format_double(*s_max) : "";
  kv["grid_size"] = std::to_string(grid_size);
  kv["threshold_d"] = join(threshold_d);
  kv["sweep_pi1"] = join(sweep_pi1);
  kv["sweep_d_theta_sq"] = join(sweep_d_theta_sq);
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return text;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void apply_config_text(RunConfig& cfg, std::istream& in,
                       const std::string& origin) {
  std::string line;
  int lineno = 0;
  bool saw_theta = false;
  bool saw_dts = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    saw_theta = saw_theta || key == "theta";
    saw_dts = saw_dts || key == "d_theta_sq";
    if (saw_theta && saw_dts) {
      throw ConfigError(origin + ": theta and d_theta_sq are exclusive");
    }
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  apply_config_text(cfg, in, path);
}

}  // namespace treecast
