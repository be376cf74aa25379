#include "treecast/threshold.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "treecast/errors.hpp"

namespace treecast {

Excess excess(double pi1, double omega, const SolverSettings& settings) {
  if (!(omega > 0.0 && omega <= 1.5)) {
    throw ConstraintViolation("omega must lie in (0, 1.5]");
  }
  if (settings.grid_size < 200) {
    throw ConstraintViolation("excess grid needs at least 200 points");
  }
  const double pi2 = 1.0 - pi1;
  const int n = settings.grid_size;
  const double log_hi = std::log(pi2);
  const double log_lo = log_hi - settings.decades * std::log(10.0);
  auto f_log = [&](double ls) {
    const double s = std::exp(ls);
    return g_quadrature(pi1, omega * s, settings.quad_order) - s;
  };
  std::vector<double> ls(n);
  std::vector<double> val(n);
  for (int k = 0; k < n; ++k) {
    ls[k] = k == n - 1 ? log_hi : log_lo + (log_hi - log_lo) * k / (n - 1);
    val[k] = f_log(ls[k]);
  }
  int best = 0;
  for (int k = 1; k < n; ++k) {
    if (val[k] > val[best]) best = k;
  }
  Excess out{val[best], std::exp(ls[best])};

  double a = ls[std::max(best - 1, 0)];
  double b = ls[std::min(best + 1, n - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f_log(c);
  double fd = f_log(d);
  for (int iter = 0; iter < 80 && b - a > 1e-13; ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f_log(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f_log(d);
    }
  }
  const double lm = 0.5 * (a + b);
  const double fm = f_log(lm);
  if (fm > out.max_excess) out = {fm, std::exp(lm)};
  return out;
}

std::optional<OmegaStar> omega_star(double pi1,
                                    const SolverSettings& settings) {
  if (!(settings.tol >= 1e-6)) {
    throw ConstraintViolation("omega_star tolerance must be >= 1e-6");
  }
  const Excess at_one = excess(pi1, 1.0, settings);
  if (at_one.max_excess < 0.0) return std::nullopt;

  double lo = settings.tol * 1e-3;
  if (excess(pi1, lo, settings).max_excess >= 0.0) {
    throw SolverStall("excess is already nonnegative at omega ~ 0");
  }
  double hi = 1.0;
  Excess at_hi = at_one;
  for (int iter = 0; hi - lo > settings.tol; ++iter) {
    if (iter > 200) throw SolverStall("omega bisection did not converge");
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      throw SolverStall("omega bracket cannot shrink further");
    }
    const Excess e = excess(pi1, mid, settings);
    if (e.max_excess >= 0.0) {
      hi = mid;
      at_hi = e;
    } else {
      lo = mid;
    }
  }
  if (at_hi.max_excess < 0.0) throw SolverStall("bracket lost its sign");
  return OmegaStar{hi, at_hi.argmax_s};
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::KSNotTight:
      return "KSNotTight";
    case Regime::KSTight:
      return "KSTight";
    case Regime::Boundary:
      break;
  }
  return "Boundary";
}

Regime regime_of(double pi1) {
  const double gap = 1.0 - 6.0 * pi1 * (1.0 - pi1);
  if (std::abs(gap) <= kBoundaryBand) return Regime::Boundary;
  return gap > 0 ? Regime::KSNotTight : Regime::KSTight;
}

ThresholdReport classify_regime(double pi1, const std::vector<int>& ds,
                                const SolverSettings& settings) {
  if (!(pi1 >= 0.5 && pi1 < 1.0)) {
    throw ConstraintViolation("pi1 must lie in [1/2, 1)");
  }
  ThresholdReport r;
  r.pi1 = pi1;
  r.regime = regime_of(pi1);
  r.settings = settings;
  if (r.regime == Regime::KSNotTight) {
    if (auto w = omega_star(pi1, settings)) {
      r.omega_star = w->omega;
      r.s_star = w->s_star;
      r.certificate = std::abs(
          g_quadrature(pi1, w->omega * w->s_star, settings.quad_order) -
          w->s_star);
    }
  }
  for (int d : ds) {
    ThetaApprox t;
    t.d = d;
    t.ks_theta = 1.0 / std::sqrt(static_cast<double>(d));
    if (r.omega_star) t.theta_plus = std::sqrt(*r.omega_star / d);
    r.thetas.push_back(t);
  }
  return r;
}

void write_threshold_json(std::ostream& out, const ThresholdReport& r) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json j;
  j["pi1"] = r.pi1;
  j["pi2"] = 1.0 - r.pi1;
  j["regime"] = to_string(r.regime);
  j["one_minus_6pi1pi2"] = 1.0 - 6.0 * r.pi1 * (1.0 - r.pi1);
  j["omega_star"] = opt(r.omega_star);
  j["s_star"] = opt(r.s_star);
  j["certificate"] = {{"abs_g_minus_s", opt(r.certificate)},
                      {"bound", 10.0 * r.settings.tol},
                      {"holds", r.certificate.has_value() &&
                                    *r.certificate <= 10.0 * r.settings.tol}};
  j["solver"] = {{"tol", r.settings.tol},
                 {"quad_order", r.settings.quad_order},
                 {"grid_size", r.settings.grid_size},
                 {"grid_decades", r.settings.decades}};
  ordered_json thetas = ordered_json::array();
  for (const ThetaApprox& t : r.thetas) {
    thetas.push_back({{"d", t.d},
                      {"theta_plus_approx", opt(t.theta_plus)},
                      {"ks_theta", t.ks_theta}});
  }
  j["theta"] = thetas;
  out << j.dump(2) << '\n';
}

Classification predicted_classification(const ThresholdReport& report,
                                        double d_theta_sq) {
  switch (report.regime) {
    case Regime::KSNotTight: {
      const double cut = report.omega_star.value_or(1.0);
      return d_theta_sq > cut ? Classification::Reconstruction
                              : Classification::NonReconstruction;
    }
    case Regime::KSTight:
      return d_theta_sq > 1.0 ? Classification::Reconstruction
                              : Classification::NonReconstruction;
    case Regime::Boundary:
      break;
  }
  return Classification::Undecided;
}

FiniteDCheck finite_d_check(const ModelParams& p, const ThresholdReport& report,
                            const TrajectorySource& source,
                            const ClassifyOptions& opts) {
  FiniteDCheck out;
  out.predicted = predicted_classification(report, p.d_theta_sq());
  out.observed = classify(source(p), opts);
  out.agree = out.predicted == out.observed;
  return out;
}

}  // namespace treecast
