#include "treecast/density_evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "treecast/errors.hpp"
#include "treecast/format.hpp"
#include "treecast/parallel.hpp"
#include "treecast/rng.hpp"

namespace treecast {
namespace {

constexpr double kClamp = 1e-300;
// Reductions are summed per fixed-size block, then across blocks in
// order, so the rounding pattern does not depend on the worker count.
constexpr std::size_t kReduceBlock = 1 << 14;

template <std::size_t K, class F>
std::array<double, K> ordered_sums(std::size_t n, unsigned workers, F&& term) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<std::array<double, K>> partial(blocks);
  parallel_for(
      blocks,
      [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
          std::array<double, K> acc{};
          const std::size_t end = std::min(n, (b + 1) * kReduceBlock);
          for (std::size_t i = b * kReduceBlock; i < end; ++i) {
            const std::array<double, K> t = term(i);
            for (std::size_t k = 0; k < K; ++k) acc[k] += t[k];
          }
          partial[b] = acc;
        }
      },
      workers);
  std::array<double, K> total{};
  for (const auto& part : partial) {
    for (std::size_t k = 0; k < K; ++k) total[k] += part[k];
  }
  return total;
}

// log Z2-factor minus log Z1-factor for one child value y.
struct LogRatio {
  double a;  // theta / pi1
  double b;  // theta / pi2
  double pi1;
  double operator()(double y) const {
    const double u = y - pi1;
    return std::log(std::max(1.0 - b * u, kClamp)) -
           std::log(std::max(1.0 + a * u, kClamp));
  }
};

// Posterior of state 1 given the accumulated log ratio L = log(Z2/Z1):
// 1 / (1 + (pi2/pi1) e^L), and its complement, both without cancellation.
inline void posterior_pair(double t, double& p1, double& p2) {
  if (t > 0) {
    const double e = std::exp(-t);
    p1 = e / (1.0 + e);
    p2 = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(t);
    p1 = 1.0 / (1.0 + e);
    p2 = e / (1.0 + e);
  }
}

void recenter(const ModelParams& p, SamplePool& pool, unsigned workers) {
  const std::size_t n = pool.size();
  const double pi1 = p.pi1();
  const double pi2 = p.pi2();
  const auto& plus = pool.plus;
  const auto& minus = pool.minus;
  double lambda = 0.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double e = std::exp(lambda);
    const auto s = ordered_sums<2>(n, workers, [&](std::size_t i) {
      const double v = plus[i];
      const double a = v * e / (v * e + (1.0 - v));
      const double m = minus[i];
      const double b = (1.0 - m) * e / ((1.0 - m) * e + m);
      return std::array<double, 2>{pi1 * (a - pi1) + pi2 * (b - pi1),
                                   pi1 * a * (1.0 - a) + pi2 * b * (1.0 - b)};
    });
    const double f = s[0] / static_cast<double>(n);
    const double fp = s[1] / static_cast<double>(n);
    // Below this the mean constraint is met to rounding.
    if (std::abs(f) <= 8.0 * std::numeric_limits<double>::epsilon() ||
        fp <= 0.0) {
      break;
    }
    const double step = f / fp;
    lambda -= step;
    if (std::abs(step) < 1e-15) break;
  }
  if (lambda == 0.0) return;
  if (!std::isfinite(lambda)) throw NonFinite("prior recentering diverged");
  const double e = std::exp(lambda);
  parallel_for(
      n,
      [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
          const double v = pool.plus[i];
          pool.plus[i] = v * e / (v * e + (1.0 - v));
          const double m = pool.minus[i];
          pool.minus[i] = m / ((1.0 - m) * e + m);
        }
      },
      workers);
}

}  // namespace

SamplePool initial_pool(std::size_t size, std::uint64_t seed) {
  if (size == 0) throw EmptyPool("pool size must be positive");
  SamplePool pool;
  pool.plus.assign(size, 1.0);
  pool.minus.assign(size, 1.0);
  pool.level = 0;
  pool.seed = seed;
  return pool;
}

SamplePool de_step(const ModelParams& p, const SamplePool& pool,
                   std::size_t out_size, const DeOptions& opts) {
  const std::size_t n_in = pool.size();
  if (n_in == 0 || pool.minus.size() != n_in || out_size == 0) {
    throw EmptyPool("de_step needs nonempty, equal-length pools");
  }
  const unsigned workers = opts.workers ? opts.workers : worker_count();
  const LogRatio ratio{p.theta() / p.pi1(), p.theta() / p.pi2(), p.pi1()};

  std::vector<double> table_plus(n_in);
  std::vector<double> table_minus(n_in);
  parallel_for(
      n_in,
      [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
          table_plus[i] = ratio(pool.plus[i]);
          table_minus[i] = ratio(1.0 - pool.minus[i]);
        }
      },
      workers);

  const Channel2x2 m = transition_matrix(p);
  const double log_prior = std::log(p.pi2() / p.pi1());
  const int d = p.d();
  const double scale = static_cast<double>(n_in);
  const std::size_t last = n_in - 1;
  const auto level = static_cast<std::uint32_t>(pool.level + 1);

  SamplePool out;
  out.plus.resize(out_size);
  out.minus.resize(out_size);
  out.level = pool.level + 1;
  out.seed = pool.seed;

  for (int row = 0; row < 2; ++row) {
    const double q1 = m(row, 0);
    const double to_plus = q1 > 0 ? scale / q1 : 0.0;
    const double to_minus = q1 < 1 ? scale / (1.0 - q1) : 0.0;
    const auto domain = static_cast<std::uint32_t>(
        row == 0 ? StreamDomain::PoolPlus : StreamDomain::PoolMinus);
    std::vector<double>& dest = row == 0 ? out.plus : out.minus;
    parallel_for(
        out_size,
        [&](std::size_t i0, std::size_t i1) {
          for (std::size_t i = i0; i < i1; ++i) {
            SampleRng rng(pool.seed, domain, level,
                          static_cast<std::uint32_t>(i));
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
              const double u = rng.next_unit();
              if (u < q1) {
                const auto k = static_cast<std::size_t>(u * to_plus);
                acc += table_plus[std::min(k, last)];
              } else {
                const auto k = static_cast<std::size_t>((u - q1) * to_minus);
                acc += table_minus[std::min(k, last)];
              }
            }
            const double t = acc + log_prior;
            if (std::isnan(t)) {
              throw NonFinite("log-likelihood ratio is NaN");
            }
            double p1 = 0.0;
            double p2 = 0.0;
            posterior_pair(t, p1, p2);
            dest[i] = row == 0 ? p1 : p2;
          }
        },
        workers);
  }

  if (opts.recenter_prior) recenter(p, out, workers);
  return out;
}

PoolMoments pool_moments(const ModelParams& p, const SamplePool& pool) {
  const std::size_t n = pool.size();
  if (n == 0) throw EmptyPool("pool_moments on an empty pool");
  const double pi1 = p.pi1();
  const double pi2 = p.pi2();
  const double nn = static_cast<double>(n);
  const unsigned workers = worker_count();
  const auto s1 = ordered_sums<3>(n, workers, [&](std::size_t i) {
    const double u = pool.plus[i] - pi1;
    return std::array<double, 3>{u, u * u, pool.minus[i] - pi2};
  });
  PoolMoments out;
  out.x = s1[0] / nn;
  out.z = s1[1] / nn;
  out.e_x_minus = s1[2] / nn;
  if (n > 1) {
    const auto s2 = ordered_sums<3>(n, workers, [&](std::size_t i) {
      const double u = pool.plus[i] - pi1;
      const double a = u - out.x;
      const double b = u * u - out.z;
      const double c = pool.minus[i] - pi2 - out.e_x_minus;
      return std::array<double, 3>{a * a, b * b, c * c};
    });
    out.x_stderr = std::sqrt(s2[0] / (nn - 1) / nn);
    out.z_stderr = std::sqrt(s2[1] / (nn - 1) / nn);
    out.e_x_minus_stderr = std::sqrt(s2[2] / (nn - 1) / nn);
  }
  return out;
}

YMoment y_first_moment(const ModelParams& p, const SamplePool& pool) {
  const PoolMoments mom = pool_moments(p, pool);
  const Channel2x2 m = transition_matrix(p);
  // Y - pi1 is X+ - pi1 w.p. m11 and 1 - X- - pi1 = pi2 - X- w.p. m12.
  YMoment out;
  out.mean = m.m11 * mom.x - m.m12 * mom.e_x_minus;
  out.stderr = std::hypot(m.m11 * mom.x_stderr, m.m12 * mom.e_x_minus_stderr);
  return out;
}

namespace {

LevelRecord record_for(const ModelParams& p, const SamplePool& pool,
                       double seconds) {
  const PoolMoments mom = pool_moments(p, pool);
  LevelRecord r;
  r.level = pool.level;
  r.x = mom.x;
  r.x_stderr = mom.x_stderr;
  r.z = mom.z;
  r.z_stderr = mom.z_stderr;
  r.z_over_x = mom.x > 0 ? mom.z / mom.x
                         : std::numeric_limits<double>::quiet_NaN();
  r.pool_size = pool.size();
  r.wall_seconds = seconds;
  return r;
}

}  // namespace

Trajectory run_trajectory(const ModelParams& p, int n_max,
                          std::size_t pool_size, std::uint64_t seed,
                          const DeOptions& opts) {
  if (n_max < 0) throw ConfigError("n_max must be nonnegative");
  Trajectory traj;
  traj.seed = seed;
  traj.pool_size = pool_size;
  SamplePool pool = initial_pool(pool_size, seed);
  traj.levels.push_back(record_for(p, pool, 0.0));
  for (int n = 0; n < n_max; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    pool = de_step(p, pool, pool_size, opts);
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    traj.levels.push_back(record_for(p, pool, dt.count()));
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "level,x,x_stderr,z,z_stderr,z_over_x,pool_size\n";
  for (const LevelRecord& r : traj.levels) {
    out << r.level << ',' << format_double(r.x) << ','
        << format_double(r.x_stderr) << ',' << format_double(r.z) << ','
        << format_double(r.z_stderr) << ',' << format_double(r.z_over_x)
        << ',' << r.pool_size << '\n';
  }
}

namespace {

// Depth-first: samples the subtree below a node in state `state` and
// returns log P(leaves | node = 1), log P(leaves | node = 2) up to a
// common additive constant.
struct TreeWalker {
  const Channel2x2& m;
  std::array<std::array<double, 2>, 2> log_m;
  int d;
  SampleRng& rng;

  std::array<double, 2> visit(int state, int depth) {
    if (depth == 0) {
      return state == 0 ? std::array<double, 2>{0.0, -INFINITY}
                        : std::array<double, 2>{-INFINITY, 0.0};
    }
    std::array<double, 2> acc{0.0, 0.0};
    for (int j = 0; j < d; ++j) {
      const int child = rng.next_unit() < m(state, 0) ? 0 : 1;
      const auto lc = visit(child, depth - 1);
      for (int a = 0; a < 2; ++a) {
        const double t0 = log_m[a][0] + lc[0];
        const double t1 = log_m[a][1] + lc[1];
        const double hi = std::max(t0, t1);
        acc[a] += hi + std::log(std::exp(t0 - hi) + std::exp(t1 - hi));
      }
    }
    const double shift = std::max(acc[0], acc[1]);
    return {acc[0] - shift, acc[1] - shift};
  }
};

}  // namespace

BpEstimate broadcast_bp_estimate(const ModelParams& p, int n,
                                 std::size_t num_trees, std::uint64_t seed,
                                 unsigned workers) {
  if (n < 0) throw ConfigError("depth must be nonnegative");
  double leaves = 1.0;
  for (int k = 0; k < n; ++k) leaves *= p.d();
  if (leaves > 1e7) {
    throw BudgetExceeded("broadcast tree with " + format_double(leaves) +
                         " leaves exceeds the 1e7 budget");
  }
  BpEstimate out;
  out.num_trees = num_trees;
  if (n == 0) {
    out.x_n = p.pi2();
    return out;
  }
  if (num_trees == 0) throw EmptyPool("num_trees must be positive");
  const Channel2x2 m = transition_matrix(p);
  const std::array<std::array<double, 2>, 2> log_m{
      {{std::log(m.m11), std::log(m.m12)}, {std::log(m.m21), std::log(m.m22)}}};
  std::vector<double> root(num_trees);
  parallel_for(
      num_trees,
      [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
          SampleRng rng(seed,
                        static_cast<std::uint32_t>(StreamDomain::BroadcastTree),
                        static_cast<std::uint32_t>(n),
                        static_cast<std::uint32_t>(i));
          TreeWalker walker{m, log_m, p.d(), rng};
          const auto ll = walker.visit(0, n);
          const double t = std::log(p.pi2()) + ll[1] -
                           (std::log(p.pi1()) + ll[0]);
          double p1 = 0.0;
          double p2 = 0.0;
          posterior_pair(t, p1, p2);
          root[i] = p1;
        }
      },
      workers);
  double sum = 0.0;
  for (double v : root) sum += v;
  const double nn = static_cast<double>(num_trees);
  const double mean = sum / nn;
  double ss = 0.0;
  for (double v : root) ss += (v - mean) * (v - mean);
  out.x_n = mean - p.pi1();
  out.stderr = num_trees > 1 ? std::sqrt(ss / (nn - 1) / nn) : 0.0;
  return out;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::NonReconstruction:
      return "NonReconstruction";
    case Classification::Reconstruction:
      return "Reconstruction";
    case Classification::Undecided:
      break;
  }
  return "Undecided";
}

Classification classify(const Trajectory& traj, const ClassifyOptions& opts) {
  const int w = opts.window;
  const auto& lv = traj.levels;
  if (w < 3 || static_cast<int>(lv.size()) < 2 * w) {
    return Classification::Undecided;
  }
  const std::size_t start = lv.size() - static_cast<std::size_t>(w);

  bool all_small = true;
  bool monotone = true;
  double sum = 0.0;
  double se_sum = 0.0;
  for (std::size_t k = start; k < lv.size(); ++k) {
    all_small = all_small && lv[k].x < opts.eps_zero;
    sum += lv[k].x;
    se_sum += lv[k].x_stderr;
    if (k > start) {
      const double noise = 3.0 * std::hypot(lv[k].x_stderr, lv[k - 1].x_stderr);
      monotone = monotone && lv[k].x <= lv[k - 1].x + noise;
    }
  }
  const double mean = sum / w;
  const double se = se_sum / w;
  if (all_small && monotone) return Classification::NonReconstruction;

  // Thirds of the window.
  const std::size_t third = static_cast<std::size_t>(w) / 3;
  auto block_mean = [&](std::size_t b) {
    double s = 0.0;
    for (std::size_t k = 0; k < third; ++k) s += lv[start + b * third + k].x;
    return s / static_cast<double>(third);
  };
  const double m1 = block_mean(0);
  const double m2 = block_mean(1);
  const double m3 = block_mean(2);
  const double block_se = se / std::sqrt(static_cast<double>(third));
  const double drift = m1 - m3;
  const bool level = std::abs(drift) <= std::max(0.1 * std::abs(mean),
                                                 5.0 * block_se);
  if (mean > opts.eps_zero + 5.0 * se && level) {
    return Classification::Reconstruction;
  }

  const bool decreasing = drift > 5.0 * block_se && m1 > m2 && m2 > m3;
  if (monotone && decreasing && m3 > 0) {
    const double y1 = 1.0 / m1;
    const double y2 = 1.0 / m2;
    const double y3 = 1.0 / m3;
    if (y3 - y2 >= opts.decay_ratio * (y2 - y1)) {
      return Classification::NonReconstruction;
    }
  }
  return Classification::Undecided;
}

}  // namespace treecast
