#include "treecast/gaussian_limit.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>

#include "treecast/errors.hpp"
#include "treecast/format.hpp"

namespace treecast {
namespace {

void check_pi1(double pi1) {
  if (!(pi1 >= 0.5 && pi1 < 1.0)) {
    throw ConstraintViolation("pi1 must lie in [1/2, 1), got " +
                              format_double(pi1));
  }
}

// Physicists' Gauss-Hermite nodes by Newton iteration on the orthonormal
// recurrence, seeded from the usual asymptotic guesses; then rescaled to
// the standard normal.
HermiteRule build_rule(int n) {
  std::vector<double> x(n);
  std::vector<double> w(n);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -1.0 / 6);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  HermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[i];
  // Ascending order: the recurrence produced the largest node first.
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::sqrt(2.0) * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] / total;
  }
  return rule;
}

double logistic(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

GaussianLimitParams GaussianLimitParams::from_pi1(double pi1) {
  check_pi1(pi1);
  const double pi2 = 1.0 - pi1;
  GaussianLimitParams g;
  g.mu1 = 1.0 / (2.0 * pi1);
  g.mu2 = -(1.0 + pi2) / (2.0 * pi2 * pi2);
  g.sigma = {{{1.0 / pi1, -1.0 / pi2}, {-1.0 / pi2, pi1 / (pi2 * pi2)}}};
  g.a = 1.0 / (pi1 * pi2 * pi2);
  return g;
}

const HermiteRule& hermite_rule(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<HermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<HermiteRule>(build_rule(order));
  return *slot;
}

double g_quadrature(double pi1, double s, int order) {
  check_pi1(pi1);
  if (!(s >= 0.0)) throw ConstraintViolation("g needs s >= 0");
  if (order < 20) throw ConstraintViolation("quadrature order must be >= 20");
  if (s == 0.0) return 0.0;
  const double pi2 = 1.0 - pi1;
  const double a = 1.0 / (pi1 * pi2 * pi2);
  const double mean = a * s / 2.0 + std::log(pi1 / pi2);
  const double sd = std::sqrt(a * s);
  const HermiteRule& rule = hermite_rule(order);
  const std::size_t n = rule.nodes.size();
  double acc = 0.0;
  if (sd <= std::sqrt(std::numbers::pi)) {
    // logistic(b + e) - logistic(b) = logistic(b) (1 - logistic(b + e))
    // expm1(e) with logistic(b) = pi1, free of cancellation at small s.
    const double shift = a * s / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = shift + sd * rule.nodes[i];
      acc += rule.weights[i] * (1.0 - logistic(mean + sd * rule.nodes[i])) *
             std::expm1(e);
    }
    return pi1 * acc;
  }
  const double alpha = mean / sd;
  const double beta = std::numbers::pi / sd;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = rule.nodes[i];
    const double q = t == 0.0 ? alpha / beta
                              : std::sin(alpha * t) / std::sinh(beta * t);
    acc += rule.weights[i] * q;
  }
  const double e_logistic =
      0.5 + 0.5 * std::sqrt(2.0 * std::numbers::pi) / sd * acc;
  return e_logistic - pi1;
}

MonteCarloEstimate g_montecarlo(double pi1, double s, std::size_t num_samples,
                                std::uint64_t seed) {
  check_pi1(pi1);
  if (!(s >= 0.0)) throw ConstraintViolation("g needs s >= 0");
  MonteCarloEstimate out;
  if (s == 0.0) return out;
  if (num_samples < 2) throw ConstraintViolation("need at least 2 samples");
  const double pi2 = 1.0 - pi1;
  const GaussianLimitParams gp = GaussianLimitParams::from_pi1(pi1);
  // Cholesky factor of s * Sigma; Sigma has rank one, so l22 is ~0.
  const double l11 = std::sqrt(s * gp.sigma[0][0]);
  const double l21 = s * gp.sigma[1][0] / l11;
  const double l22 = std::sqrt(std::max(0.0, s * gp.sigma[1][1] - l21 * l21));
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  double sum = 0.0;
  double sum_sq = 0.0;
  const double log_ratio = std::log(pi2 / pi1);
  for (std::size_t i = 0; i < num_samples; ++i) {
    const double n1 = normal(gen);
    const double n2 = normal(gen);
    const double u1 = s * gp.mu1 + l11 * n1;
    const double u2 = s * gp.mu2 + l21 * n1 + l22 * n2;
    const double v = logistic(-(log_ratio + u2 - u1)) - pi1;
    sum += v;
    sum_sq += v * v;
  }
  const double nn = static_cast<double>(num_samples);
  out.value = sum / nn;
  const double var = (sum_sq - nn * out.value * out.value) / (nn - 1);
  out.stderr = std::sqrt(std::max(0.0, var) / nn);
  return out;
}

SeriesCoefficients series_coefficients(double pi1) {
  check_pi1(pi1);
  const double pi2 = 1.0 - pi1;
  const double pp = pi1 * pi2;
  SeriesCoefficients c;
  c.c2 = (1.0 - 6.0 * pp) / (2.0 * pi1 * pi2 * pi2);
  c.c3 = (1.0 - 24.0 * pp + 90.0 * pp * pp) /
         (6.0 * pi1 * pi1 * std::pow(pi2, 4));
  return c;
}

double g_series(double pi1, double s) {
  const SeriesCoefficients c = series_coefficients(pi1);
  return s + c.c2 * s * s + c.c3 * s * s * s;
}

void write_g_grid(std::ostream& out, double pi1, std::span<const double> s,
                  int order) {
  out << "s,g,g_minus_s\n";
  for (double v : s) {
    const double g = g_quadrature(pi1, v, order);
    out << format_double(v) << ',' << format_double(g) << ','
        << format_double(g - v) << '\n';
  }
}

std::vector<double> uniform_grid(double hi, int n) {
  std::vector<double> s(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 1; k <= n; ++k) s[k - 1] = hi * k / n;
  return s;
}

}  // namespace treecast
