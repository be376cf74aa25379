#pragma once

#include <array>

namespace treecast {

/// Row-stochastic 2x2 matrix; state 1 is index 0, state 2 is index 1.
struct Channel2x2 {
  double m11 = 1.0;
  double m12 = 0.0;
  double m21 = 0.0;
  double m22 = 1.0;

  double operator()(int row, int col) const;
  Channel2x2 operator*(const Channel2x2& rhs) const;

  /// Left eigenvector for eigenvalue 1, normalized to sum 1.
  std::array<double, 2> stationary() const;
  /// {1, m11 + m22 - 1}; the second entry is the trace minus one.
  std::array<double, 2> eigenvalues() const;
};

enum class Degeneracy { Reject, AllowNoiseless };

/// The asymmetric binary channel on the d-ary tree.
///
/// Canonical inputs are (pi1, theta, d); delta is derived as
/// (1 - theta)(pi2 - pi1). Construction enforces pi1 >= pi2 > 0,
/// |theta| + |delta| <= 1 and |theta| < 1 (unless the noiseless path is
/// requested explicitly). Values are immutable once built.
class ModelParams {
 public:
  static ModelParams from_pi_theta(double pi1, double theta, int d,
                                   Degeneracy degeneracy = Degeneracy::Reject);
  /// theta = sign * sqrt(d_theta_sq / d).
  static ModelParams from_d_theta_sq(double pi1, double d_theta_sq, int d,
                                     int sign = +1);

  int d() const { return d_; }
  double theta() const { return theta_; }
  double pi1() const { return pi1_; }
  double pi2() const { return pi2_; }
  double delta() const { return delta_; }
  double d_theta_sq() const { return d_ * theta_ * theta_; }

  /// True when d*theta^2 > 1. Permitted, but outside the dtheta^2 <= 1
  /// regime the large-degree analysis is about.
  bool beyond_kesten_stigum() const { return d_theta_sq() > 1.0; }

 private:
  ModelParams(int d, double theta, double pi1, double delta)
      : d_(d), theta_(theta), pi1_(pi1), pi2_(1.0 - pi1), delta_(delta) {}

  int d_;
  double theta_;
  double pi1_;
  double pi2_;
  double delta_;
};

/// M_ij = theta [i == j] + (1 - theta) pi_j.
Channel2x2 transition_matrix(const ModelParams& p);

/// The same matrix written as the symmetric channel plus an asymmetry term:
/// (1/2)[[1+t, 1-t], [1-t, 1+t]] + (delta/2)[[-1, 1], [-1, 1]].
Channel2x2 channel_from_delta(double theta, double delta);

/// Closed-form s-step matrix: M^s_11 = pi1 + pi2 theta^s,
/// M^s_22 = pi2 + pi1 theta^s.
Channel2x2 multistep_matrix(const ModelParams& p, int s);

struct KestenStigum {
  double theta_ks;    // d^{-1/2}
  double d_theta_sq;  // d theta^2
  bool above_ks;      // d theta^2 > 1
};

KestenStigum kesten_stigum(const ModelParams& p);

}  // namespace treecast
