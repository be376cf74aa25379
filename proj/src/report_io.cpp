#include "treecast/report_io.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "treecast/errors.hpp"
#include "treecast/format.hpp"

namespace treecast {

void write_exact_moments_csv(std::ostream& out,
                             const std::vector<ExactMoments>& rows) {
  out << "level,x,z,delta,e_x_minus\n";
  for (const ExactMoments& m : rows) {
    out << m.level << ',' << format_double(m.x_n) << ','
        << format_double(m.z_n) << ',' << format_double(m.delta_n) << ','
        << format_double(m.e_x_minus) << '\n';
  }
}

void write_bp_csv(std::ostream& out, const std::vector<BpRow>& rows) {
  out << "level,x,x_stderr,num_trees\n";
  for (const BpRow& r : rows) {
    out << r.level << ',' << format_double(r.estimate.x_n) << ','
        << format_double(r.estimate.stderr) << ',' << r.estimate.num_trees
        << '\n';
  }
}

void write_phase_diagram_csv(std::ostream& out,
                             const std::vector<PhaseRow>& rows) {
  out << "pi1,d_theta_sq,d,regime,omega_star,x_tail,x_tail_stderr,"
         "classification\n";
  for (const PhaseRow& r : rows) {
    out << format_double(r.pi1) << ',' << format_double(r.d_theta_sq) << ','
        << r.d << ',' << to_string(r.regime) << ','
        << (r.omega_star ? format_double(*r.omega_star) : "") << ','
        << format_double(r.x_tail) << ',' << format_double(r.x_tail_stderr)
        << ',' << to_string(r.classification) << '\n';
  }
}

void emit_phase_diagram(const std::filesystem::path& path,
                        const std::vector<PhaseRow>& rows) {
  if (rows.empty()) throw ConfigError("phase diagram needs at least one row");
  std::ofstream out = open_output(path);
  write_phase_diagram_csv(out, rows);
  out.flush();
  if (!out) throw IOFailure("failed writing " + path.string());
}

std::pair<double, double> tail_mean(const Trajectory& traj, int window) {
  const auto& lv = traj.levels;
  const std::size_t w =
      std::min(lv.size(), static_cast<std::size_t>(std::max(window, 1)));
  double sum = 0.0;
  double var = 0.0;
  for (std::size_t k = lv.size() - w; k < lv.size(); ++k) {
    sum += lv[k].x;
    var += lv[k].x_stderr * lv[k].x_stderr;
  }
  const double n = static_cast<double>(w);
  return {sum / n, std::sqrt(var) / n};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IOFailure("cannot create directory " +
                      path.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOFailure("cannot open " + path.string() + " for writing");
  return out;
}

void write_sidecar(const std::filesystem::path& path, const RunConfig& cfg,
                   const std::string& artifact,
                   const nlohmann::ordered_json& extra) {
  nlohmann::ordered_json j;
  j["artifact"] = artifact;
  j["config_hash"] = cfg.hash();
  j["seed"] = cfg.seed;
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  std::istringstream lines(cfg.canonical_text());
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    c[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = c;
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) j[k] = v;
  }
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IOFailure("failed writing " + path.string());
}

}  // namespace treecast
