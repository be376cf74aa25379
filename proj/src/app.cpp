#include "treecast/app.hpp"

#include <filesystem>
#include <map>
#include <ostream>

#include "treecast/checks.hpp"
#include "treecast/density_evolution.hpp"
#include "treecast/errors.hpp"
#include "treecast/exact_oracle.hpp"
#include "treecast/format.hpp"
#include "treecast/gaussian_limit.hpp"
#include "treecast/report_io.hpp"
#include "treecast/threshold.hpp"

namespace treecast {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

SolverSettings solver_settings(const RunConfig& cfg) {
  SolverSettings st;
  st.tol = cfg.tol;
  st.quad_order = cfg.quad_order;
  st.grid_size = cfg.grid_size;
  return st;
}

ClassifyOptions classify_options(const RunConfig& cfg) {
  ClassifyOptions o;
  o.eps_zero = cfg.eps_zero;
  o.window = cfg.window;
  return o;
}

DeOptions de_options(const RunConfig& cfg) {
  DeOptions o;
  o.recenter_prior = cfg.recenter;
  return o;
}

ordered_json model_json(const ModelParams& p) {
  const KestenStigum ks = kesten_stigum(p);
  return {{"pi1", p.pi1()},
          {"pi2", p.pi2()},
          {"theta", p.theta()},
          {"delta", p.delta()},
          {"d", p.d()},
          {"d_theta_sq", ks.d_theta_sq},
          {"theta_ks", ks.theta_ks},
          {"above_ks", ks.above_ks}};
}

int run_exact(const RunConfig& cfg, std::ostream& log) {
  const ModelParams p = cfg.model();
  const int n = cfg.effective_n_max();
  const auto laws =
      exact_levels(p, n, static_cast<std::size_t>(cfg.max_configurations));
  std::vector<ExactMoments> rows;
  double worst = 0.0;
  for (const ExactLaws& l : laws) {
    rows.push_back(moments(l.plus, l.minus, p));
    worst = std::max(worst, exact_identities(p, l).max_abs_residual());
  }
  const fs::path dir = cfg.out;
  {
    std::ofstream out = open_output(dir / "exact_moments.csv");
    write_exact_moments_csv(out, rows);
  }
  {
    std::ofstream out = open_output(dir / "atoms_plus.csv");
    write_atoms_csv(out, laws.back().plus);
  }
  {
    std::ofstream out = open_output(dir / "atoms_minus.csv");
    write_atoms_csv(out, laws.back().minus);
  }
  write_sidecar(dir / "exact_moments.meta.json", cfg, "exact_moments.csv",
                {{"model", model_json(p)},
                 {"atoms_at_final_level", laws.back().plus.size()},
                 {"max_identity_residual", worst}});
  log << "exact: levels 0.." << n << ", x_" << n << " = "
      << format_double(rows.back().x_n) << ", max identity residual "
      << format_double(worst) << '\n';
  return 0;
}

int run_de(const RunConfig& cfg, std::ostream& log) {
  const ModelParams p = cfg.model();
  const Trajectory traj = run_trajectory(p, cfg.effective_n_max(), cfg.pool,
                                         cfg.seed, de_options(cfg));
  const Classification c = classify(traj, classify_options(cfg));
  const fs::path dir = cfg.out;
  {
    std::ofstream out = open_output(dir / "trajectory.csv");
    write_trajectory_csv(out, traj);
  }
  write_sidecar(dir / "trajectory.meta.json", cfg, "trajectory.csv",
                {{"model", model_json(p)},
                 {"pool_size", cfg.pool},
                 {"classification", to_string(c)}});
  const LevelRecord& last = traj.levels.back();
  log << "de: x_" << last.level << " = " << format_double(last.x) << " +- "
      << format_double(last.x_stderr) << ", classification " << to_string(c)
      << '\n';
  return 0;
}

int run_bp(const RunConfig& cfg, std::ostream& log) {
  const ModelParams p = cfg.model();
  std::vector<BpRow> rows;
  for (int n = 0; n <= cfg.effective_n_max(); ++n) {
    rows.push_back({n, broadcast_bp_estimate(p, n, cfg.num_trees, cfg.seed)});
  }
  const fs::path dir = cfg.out;
  {
    std::ofstream out = open_output(dir / "bp.csv");
    write_bp_csv(out, rows);
  }
  write_sidecar(dir / "bp.meta.json", cfg, "bp.csv",
                {{"model", model_json(p)}, {"num_trees", cfg.num_trees}});
  log << "bp: x_" << rows.back().level << " = "
      << format_double(rows.back().estimate.x_n) << " +- "
      << format_double(rows.back().estimate.stderr) << '\n';
  return 0;
}

int run_gfunc(const RunConfig& cfg, std::ostream& log) {
  const double hi = cfg.s_max.value_or(1.0 - cfg.pi1);
  const auto grid = uniform_grid(hi, cfg.grid_points);
  const fs::path dir = cfg.out;
  {
    std::ofstream out = open_output(dir / "gfunc.csv");
    write_g_grid(out, cfg.pi1, grid, cfg.quad_order);
  }
  const SeriesCoefficients c = series_coefficients(cfg.pi1);
  const GaussianLimitParams gp = GaussianLimitParams::from_pi1(cfg.pi1);
  write_sidecar(dir / "gfunc.meta.json", cfg, "gfunc.csv",
                {{"c2", c.c2},
                 {"c3", c.c3},
                 {"mu1", gp.mu1},
                 {"mu2", gp.mu2},
                 {"a", gp.a}});
  log << "gfunc: " << grid.size() << " points on (0, " << format_double(hi)
      << "], c2 = " << format_double(c.c2) << '\n';
  return 0;
}

int run_threshold(const RunConfig& cfg, std::ostream& log) {
  const ThresholdReport rep =
      classify_regime(cfg.pi1, cfg.threshold_d, solver_settings(cfg));
  const fs::path dir = cfg.out;
  {
    std::ofstream out = open_output(dir / "threshold.json");
    write_threshold_json(out, rep);
  }
  write_sidecar(dir / "threshold.meta.json", cfg, "threshold.json");
  log << "threshold: regime " << to_string(rep.regime);
  if (rep.omega_star) log << ", omega* = " << format_double(*rep.omega_star);
  log << '\n';
  return 0;
}

int run_sweep(const RunConfig& cfg, std::ostream& log) {
  if (cfg.sweep_pi1.empty() || cfg.sweep_d_theta_sq.empty()) {
    throw ConfigError("sweep needs nonempty sweep_pi1 and sweep_d_theta_sq");
  }
  const SolverSettings st = solver_settings(cfg);
  std::vector<PhaseRow> rows;
  ordered_json predictions = ordered_json::array();
  for (double pi1 : cfg.sweep_pi1) {
    const ThresholdReport rep = classify_regime(pi1, {}, st);
    for (double dts : cfg.sweep_d_theta_sq) {
      const ModelParams p = ModelParams::from_d_theta_sq(pi1, dts, cfg.d);
      const Trajectory traj = run_trajectory(p, cfg.effective_n_max(),
                                             cfg.pool, cfg.seed,
                                             de_options(cfg));
      PhaseRow row;
      row.pi1 = pi1;
      row.d_theta_sq = dts;
      row.d = cfg.d;
      row.regime = rep.regime;
      row.omega_star = rep.omega_star;
      std::tie(row.x_tail, row.x_tail_stderr) = tail_mean(traj, cfg.window);
      row.classification = classify(traj, classify_options(cfg));
      rows.push_back(row);
      predictions.push_back(
          {{"pi1", pi1},
           {"d_theta_sq", dts},
           {"predicted", to_string(predicted_classification(rep, dts))}});
      log << "sweep: pi1 " << format_double(pi1) << ", d theta^2 "
          << format_double(dts) << ": " << to_string(row.classification)
          << '\n';
    }
  }
  const fs::path dir = cfg.out;
  emit_phase_diagram(dir / "phase_diagram.csv", rows);
  write_sidecar(dir / "phase_diagram.meta.json", cfg, "phase_diagram.csv",
                {{"large_degree_prediction", predictions}});
  return 0;
}

int run_check(const RunConfig& cfg, std::ostream& log) {
  CheckSettings st;
  st.seed = cfg.seed;
  st.quad_order = cfg.quad_order;
  const CheckReport rep = run_invariant_suite(st);
  const fs::path dir = cfg.out;
  {
    std::ofstream out = open_output(dir / "check_report.txt");
    rep.write(out);
  }
  write_sidecar(dir / "check_report.meta.json", cfg, "check_report.txt",
                {{"all_ok", rep.all_ok()}});
  rep.write(log);
  return rep.all_ok() ? 0 : 1;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  switch (cfg.mode) {
    case Mode::Exact: return run_exact(cfg, log);
    case Mode::De: return run_de(cfg, log);
    case Mode::Bp: return run_bp(cfg, log);
    case Mode::Gfunc: return run_gfunc(cfg, log);
    case Mode::Threshold: return run_threshold(cfg, log);
    case Mode::Sweep: return run_sweep(cfg, log);
    case Mode::Check: break;
  }
  return run_check(cfg, log);
}

}  // namespace treecast
