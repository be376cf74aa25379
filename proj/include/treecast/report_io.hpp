#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "treecast/config.hpp"
#include "treecast/density_evolution.hpp"
#include "treecast/exact_oracle.hpp"
#include "treecast/threshold.hpp"

namespace treecast {

/// Header: level,x,z,delta,e_x_minus.
void write_exact_moments_csv(std::ostream& out,
                             const std::vector<ExactMoments>& rows);

struct BpRow {
  int level = 0;
  BpEstimate estimate;
};

/// Header: level,x,x_stderr,num_trees.
void write_bp_csv(std::ostream& out, const std::vector<BpRow>& rows);

struct PhaseRow {
  double pi1 = 0.0;
  double d_theta_sq = 0.0;
  int d = 0;
  Regime regime = Regime::Boundary;
  std::optional<double> omega_star;  // empty field when absent
  double x_tail = 0.0;
  double x_tail_stderr = 0.0;
  Classification classification = Classification::Undecided;
};

/// Columns: pi1,d_theta_sq,d,regime,omega_star,x_tail,x_tail_stderr,
/// classification. Rows are written in the given order.
void write_phase_diagram_csv(std::ostream& out,
                             const std::vector<PhaseRow>& rows);

/// Writes the CSV to `path`; throws ConfigError on empty input and
/// IOFailure when the file cannot be written.
void emit_phase_diagram(const std::filesystem::path& path,
                        const std::vector<PhaseRow>& rows);

/// Mean x over the final `window` levels and its standard error.
std::pair<double, double> tail_mean(const Trajectory& traj, int window);

/// Opens `path` for writing (creating parent directories); IOFailure on
/// error.
std::ofstream open_output(const std::filesystem::path& path);

/// Sidecar next to an artifact: {"artifact", "config_hash", "seed",
/// "config": {...}} plus any extra fields, pretty-printed.
void write_sidecar(const std::filesystem::path& path, const RunConfig& cfg,
                   const std::string& artifact,
                   const nlohmann::ordered_json& extra = {});

}  // namespace treecast
