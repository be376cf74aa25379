#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "treecast/model.hpp"

namespace treecast {

/// Monte Carlo populations standing in for the laws of X+(n) and X-(n).
struct SamplePool {
  std::vector<double> plus;
  std::vector<double> minus;
  int level = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return plus.size(); }
};

/// Both populations at the point mass 1 (the root itself is observed).
SamplePool initial_pool(std::size_t size, std::uint64_t seed);

struct DeOptions {
  /// After each step, tilt every sample by a common log-odds shift so that
  /// pi1 * mean(plus) + pi2 * mean(1 - minus) = pi1 holds exactly. The
  /// exact laws satisfy this (E X1 = pi1); without it the discrepancy
  /// between the two populations is amplified by roughly d theta per level
  /// and swamps the signal at large d.
  bool recenter_prior = true;
  unsigned workers = 0;  // 0: TREECAST_THREADS or hardware default
};

/// One population-dynamics step. Each output sample draws d children i.i.d.:
/// spin from the parent's row of M, then Y uniformly from the plus pool
/// (spin 1) or as 1 - (uniform minus sample) (spin 2). Z1, Z2 are formed
/// in log space with factors clamped below at 1e-300. Throws EmptyPool,
/// NonFinite.
SamplePool de_step(const ModelParams& p, const SamplePool& pool,
                   std::size_t out_size, const DeOptions& opts = {});

struct PoolMoments {
  double x = 0.0;            // mean(plus) - pi1
  double x_stderr = 0.0;
  double z = 0.0;            // mean((plus - pi1)^2)
  double z_stderr = 0.0;
  double e_x_minus = 0.0;    // mean(minus) - pi2
  double e_x_minus_stderr = 0.0;
};

PoolMoments pool_moments(const ModelParams& p, const SamplePool& pool);

/// Mean and stderr of Y - pi1 where Y is the row-1 mixture of X+ and
/// 1 - X- pools (exact mixture weights, no resampling).
struct YMoment {
  double mean = 0.0;
  double stderr = 0.0;
};
YMoment y_first_moment(const ModelParams& p, const SamplePool& pool);

struct LevelRecord {
  int level = 0;
  double x = 0.0;
  double x_stderr = 0.0;
  double z = 0.0;
  double z_stderr = 0.0;
  double z_over_x = 0.0;  // NaN when x <= 0
  std::size_t pool_size = 0;
  double wall_seconds = 0.0;  // not exported; varies between runs
};

struct Trajectory {
  std::vector<LevelRecord> levels;
  std::uint64_t seed = 0;
  std::size_t pool_size = 0;
};

Trajectory run_trajectory(const ModelParams& p, int n_max,
                          std::size_t pool_size, std::uint64_t seed,
                          const DeOptions& opts = {});

/// Header: level,x,x_stderr,z,z_stderr,z_over_x,pool_size.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

struct BpEstimate {
  double x_n = 0.0;
  double stderr = 0.0;
  std::size_t num_trees = 0;
};

/// Samples num_trees depth-n trees with root state 1, then computes the
/// root posterior f_n(1, leaves) bottom-up. Throws BudgetExceeded when
/// d^n > 1e7.
BpEstimate broadcast_bp_estimate(const ModelParams& p, int n,
                                 std::size_t num_trees, std::uint64_t seed,
                                 unsigned workers = 0);

enum class Classification { NonReconstruction, Reconstruction, Undecided };

std::string to_string(Classification c);

struct ClassifyOptions {
  double eps_zero = 1e-3;
  int window = 25;
  /// Decay clause: a clearly decreasing tail whose reciprocal 1/x keeps
  /// growing at a non-decelerating pace (third-to-third increments ratio at
  /// least this) is heading to zero even if it is still above eps_zero.
  double decay_ratio = 0.8;
};

/// Requires at least 2 * window levels; shorter trajectories are Undecided.
Classification classify(const Trajectory& traj,
                        const ClassifyOptions& opts = {});

}  // namespace treecast
