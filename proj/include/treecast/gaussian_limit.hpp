#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace treecast {

/// Mean and covariance of the limiting Gaussian pair (W1, W2).
struct GaussianLimitParams {
  double mu1 = 0.0;  // 1 / (2 pi1)
  double mu2 = 0.0;  // -(1 + pi2) / (2 pi2^2)
  std::array<std::array<double, 2>, 2> sigma{};
  double a = 0.0;  // 1 / (pi1 pi2^2) = Var(W2 - W1)

  static GaussianLimitParams from_pi1(double pi1);
};

/// Gauss-Hermite rule for E f(Z), Z ~ N(0, 1): nodes ascending, weights
/// summing to 1. Rules are computed once per order and cached.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const HermiteRule& hermite_rule(int order);

inline constexpr int kDefaultQuadOrder = 80;

/// g(s) = E[1 / (1 + (pi2/pi1) e^W)] - pi1 with W ~ N(-a s / 2, a s).
///
/// For small spread the expectation uses the Hermite rule directly. Once
/// the standard deviation exceeds sqrt(pi) the logistic is too sharp on the
/// Gaussian scale, and the sum switches to the Fourier form
///   E logistic(U) = 1/2 + (1/2) sqrt(2 pi)/sd * E[sin(alpha Z)/sinh(beta Z)]
/// with alpha = mean/sd and beta = pi/sd, whose integrand is smooth.
/// Returns exactly 0 at s = 0. Throws ConstraintViolation for s < 0,
/// order < 20, or pi1 outside [1/2, 1).
double g_quadrature(double pi1, double s, int order = kDefaultQuadOrder);

struct MonteCarloEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

/// Independent estimator: samples (W1, W2) from the two-dimensional
/// Gaussian N(s mu, s Sigma) and averages
/// pi1 e^{W1} / (pi1 e^{W1} + pi2 e^{W2}) - pi1.
MonteCarloEstimate g_montecarlo(double pi1, double s, std::size_t num_samples,
                                std::uint64_t seed);

struct SeriesCoefficients {
  double c2 = 0.0;  // (1 - 6 pi1 pi2) / (2 pi1 pi2^2)
  double c3 = 0.0;  // (1 - 24 pi1 pi2 + 90 pi1^2 pi2^2) / (6 pi1^2 pi2^4)
};

SeriesCoefficients series_coefficients(double pi1);

/// s + c2 s^2 + c3 s^3.
double g_series(double pi1, double s);

/// Header: s,g,g_minus_s.
void write_g_grid(std::ostream& out, double pi1, std::span<const double> s,
                  int order = kDefaultQuadOrder);

/// n points s_k = k * hi / n, k = 1..n.
std::vector<double> uniform_grid(double hi, int n);

}  // namespace treecast
