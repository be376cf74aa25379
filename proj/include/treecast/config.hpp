#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treecast/model.hpp"

namespace treecast {

enum class Mode { Exact, De, Bp, Gfunc, Threshold, Sweep, Check };

std::string to_string(Mode m);
Mode parse_mode(const std::string& text);

/// Everything a run depends on. Keys in config files use the long flag
/// names with '-' or '_' (n-max, n_max, ...).
struct RunConfig {
  Mode mode = Mode::Check;

  double pi1 = 0.6;
  std::optional<double> theta;       // exclusive with d_theta_sq
  std::optional<double> d_theta_sq;
  int theta_sign = +1;               // sign used with d_theta_sq
  int d = 2;

  std::optional<int> n_max;          // mode-dependent default
  std::size_t pool = 100000;
  std::uint64_t seed = 1;
  int quad_order = 80;
  double tol = 1e-6;
  std::string out = ".";

  // exact
  double max_configurations = 5e6;
  // de / sweep
  double eps_zero = 1e-3;
  int window = 25;
  bool recenter = true;
  // bp
  std::size_t num_trees = 10000;
  // gfunc
  int grid_points = 200;
  std::optional<double> s_max;       // default pi2
  // threshold
  int grid_size = 400;
  std::vector<int> threshold_d{100, 500, 1000};
  // sweep
  std::vector<double> sweep_pi1{0.75, 0.8, 0.85, 0.9, 0.95};
  std::vector<double> sweep_d_theta_sq{0.7, 0.8, 0.9, 1.0};

  /// Sets one key from text; throws ConfigError on unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);

  int effective_n_max() const;
  ModelParams model() const;

  /// Canonical key=value listing of every setting that affects results
  /// (the output directory is excluded), one per line, sorted by key.
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash() const;
};

/// Applies a flat key=value file: '#' starts a comment, blank lines are
/// skipped, whitespace around keys and values is trimmed.
void apply_config_text(RunConfig& cfg, std::istream& in,
                       const std::string& origin = "config");
void apply_config_file(RunConfig& cfg, const std::string& path);

}  // namespace treecast
