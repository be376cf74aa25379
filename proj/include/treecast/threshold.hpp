#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treecast/density_evolution.hpp"
#include "treecast/gaussian_limit.hpp"
#include "treecast/model.hpp"

namespace treecast {

struct SolverSettings {
  double tol = 1e-6;
  int quad_order = kDefaultQuadOrder;
  int grid_size = 400;
  /// The s-grid spans [pi2 * 10^-decades, pi2] log-uniformly.
  double decades = 8.0;
};

struct Excess {
  double max_excess = 0.0;
  double argmax_s = 0.0;
};

/// max over s in (0, pi2] of g(omega s) - s: log-spaced grid, then
/// golden-section refinement between the argmax's neighbours. Ties go to
/// the smallest s.
Excess excess(double pi1, double omega, const SolverSettings& settings = {});

struct OmegaStar {
  double omega = 0.0;
  double s_star = 0.0;
};

/// Bisection on omega in (0, 1] for the sign change of the maximal excess.
/// Absent when excess at omega = 1 is negative. Throws SolverStall when the
/// bracket stops shrinking or loses its sign pattern.
std::optional<OmegaStar> omega_star(double pi1,
                                    const SolverSettings& settings = {});

enum class Regime { KSNotTight, KSTight, Boundary };

std::string to_string(Regime r);

/// Regime boundary band on 1 - 6 pi1 pi2.
inline constexpr double kBoundaryBand = 1e-12;

Regime regime_of(double pi1);

struct ThetaApprox {
  int d = 0;
  std::optional<double> theta_plus;  // sqrt(omega* / d)
  double ks_theta = 0.0;             // d^{-1/2}
};

struct ThresholdReport {
  double pi1 = 0.0;
  Regime regime = Regime::Boundary;
  std::optional<double> omega_star;
  std::optional<double> s_star;
  std::optional<double> certificate;  // |g(omega* s*) - s*|
  SolverSettings settings;
  std::vector<ThetaApprox> thetas;
};

/// omega* is only solved for in the KSNotTight regime.
ThresholdReport classify_regime(double pi1, const std::vector<int>& ds = {},
                                const SolverSettings& settings = {});

void write_threshold_json(std::ostream& out, const ThresholdReport& report);

struct FiniteDCheck {
  Classification predicted = Classification::Undecided;
  Classification observed = Classification::Undecided;
  bool agree = false;
};

using TrajectorySource = std::function<Trajectory(const ModelParams&)>;

/// Prediction from the large-degree picture: reconstruction iff
/// d theta^2 > omega* (KSNotTight) or > 1 (KSTight); Boundary predicts
/// nothing (Undecided). Observation: classify on the supplied trajectory.
FiniteDCheck finite_d_check(const ModelParams& p, const ThresholdReport& report,
                            const TrajectorySource& source,
                            const ClassifyOptions& opts = {});

Classification predicted_classification(const ThresholdReport& report,
                                        double d_theta_sq);

}  // namespace treecast
