#include "treecast/model.hpp"

#include <cmath>
#include <string>

#include "treecast/errors.hpp"

namespace treecast {

namespace {

constexpr double kConstraintSlack = 1e-12;

std::string describe(double pi1, double theta, int d) {
  return "(pi1=" + std::to_string(pi1) + ", theta=" + std::to_string(theta) +
         ", d=" + std::to_string(d) + ")";
}

}  // namespace

double Channel2x2::operator()(int row, int col) const {
  if (row == 0) return col == 0 ? m11 : m12;
  return col == 0 ? m21 : m22;
}

Channel2x2 Channel2x2::operator*(const Channel2x2& rhs) const {
  return {m11 * rhs.m11 + m12 * rhs.m21, m11 * rhs.m12 + m12 * rhs.m22,
          m21 * rhs.m11 + m22 * rhs.m21, m21 * rhs.m12 + m22 * rhs.m22};
}

std::array<double, 2> Channel2x2::stationary() const {
  // pi1 m12 = pi2 m21 for a two-state chain.
  const double flow = m12 + m21;
  if (flow == 0.0) return {0.5, 0.5};
  return {m21 / flow, m12 / flow};
}

std::array<double, 2> Channel2x2::eigenvalues() const {
  return {1.0, m11 + m22 - 1.0};
}

ModelParams ModelParams::from_pi_theta(double pi1, double theta, int d,
                                       Degeneracy degeneracy) {
  if (!std::isfinite(pi1) || !std::isfinite(theta)) {
    throw ConstraintViolation("non-finite model parameters " +
                              describe(pi1, theta, d));
  }
  if (d < 2) {
    throw ConstraintViolation("branching factor must be >= 2 " +
                              describe(pi1, theta, d));
  }
  if (pi1 < 0.5) {
    throw ConstraintViolation("pi1 >= pi2 is required; swap state labels " +
                              describe(pi1, theta, d));
  }
  if (pi1 >= 1.0) {
    throw ConstraintViolation("pi2 must be positive " +
                              describe(pi1, theta, d));
  }
  if (std::abs(theta) > 1.0) {
    throw ConstraintViolation("|theta| must not exceed 1 " +
                              describe(pi1, theta, d));
  }
  if (std::abs(theta) == 1.0 && degeneracy != Degeneracy::AllowNoiseless) {
    throw DegenerateChannel("|theta| = 1 is only available on the noiseless "
                            "test path " + describe(pi1, theta, d));
  }
  const double pi2 = 1.0 - pi1;
  const double delta = (1.0 - theta) * (pi2 - pi1);
  if (std::abs(theta) + std::abs(delta) > 1.0 + kConstraintSlack) {
    throw ConstraintViolation("|theta| + |delta| > 1 " +
                              describe(pi1, theta, d));
  }
  return ModelParams(d, theta, pi1, delta);
}

ModelParams ModelParams::from_d_theta_sq(double pi1, double d_theta_sq, int d,
                                         int sign) {
  if (!(d_theta_sq >= 0.0) || d < 1) {
    throw ConstraintViolation("d*theta^2 must be non-negative");
  }
  const double theta = (sign < 0 ? -1.0 : 1.0) *
                       std::sqrt(d_theta_sq / static_cast<double>(d));
  return from_pi_theta(pi1, theta, d);
}

Channel2x2 transition_matrix(const ModelParams& p) {
  const double t = p.theta();
  const double rest = 1.0 - t;
  return {t + rest * p.pi1(), rest * p.pi2(), rest * p.pi1(),
          t + rest * p.pi2()};
}

Channel2x2 channel_from_delta(double theta, double delta) {
  return {0.5 * (1.0 + theta) - 0.5 * delta, 0.5 * (1.0 - theta) + 0.5 * delta,
          0.5 * (1.0 - theta) - 0.5 * delta, 0.5 * (1.0 + theta) + 0.5 * delta};
}

Channel2x2 multistep_matrix(const ModelParams& p, int s) {
  if (s < 0) throw ConstraintViolation("step count must be non-negative");
  const double ts = std::pow(p.theta(), s);
  const double u = p.pi1() + p.pi2() * ts;
  const double v = p.pi2() + p.pi1() * ts;
  return {u, 1.0 - u, 1.0 - v, v};
}

KestenStigum kesten_stigum(const ModelParams& p) {
  const double dts = p.d_theta_sq();
  return {1.0 / std::sqrt(static_cast<double>(p.d())), dts, dts > 1.0};
}

}  // namespace treecast
