#include "treecast/checks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "treecast/density_evolution.hpp"
#include "treecast/errors.hpp"
#include "treecast/exact_oracle.hpp"
#include "treecast/format.hpp"
#include "treecast/gaussian_limit.hpp"
#include "treecast/model.hpp"
#include "treecast/threshold.hpp"

namespace treecast {

bool CheckReport::all_ok() const {
  return std::all_of(lines.begin(), lines.end(),
                     [](const CheckLine& l) { return l.ok; });
}

void CheckReport::write(std::ostream& out) const {
  std::size_t passed = 0;
  for (const CheckLine& l : lines) {
    out << (l.ok ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
    passed += l.ok ? 1 : 0;
  }
  out << passed << '/' << lines.size() << " checks passed\n";
}

namespace {

constexpr std::size_t kExactBudget = 5'000'000;

std::string fmt(double v) { return format_double(v); }

double matrix_gap(const Channel2x2& a, const Channel2x2& b) {
  return std::max({std::abs(a.m11 - b.m11), std::abs(a.m12 - b.m12),
                   std::abs(a.m21 - b.m21), std::abs(a.m22 - b.m22)});
}

struct Fixture {
  double pi1;
  double theta;
};

std::vector<Fixture> valid_fixtures() {
  std::vector<Fixture> out;
  for (double pi1 : {0.5, 0.6, 0.75, 0.9}) {
    for (double theta : {0.3, -0.3, 0.7, -0.7}) {
      try {
        ModelParams::from_pi_theta(pi1, theta, 2);
        out.push_back({pi1, theta});
      } catch (const ConstraintViolation&) {
        // |theta| + |delta| > 1: not a channel
      }
    }
  }
  return out;
}

void model_checks(CheckReport& r) {
  {
    const auto sym = transition_matrix(ModelParams::from_pi_theta(0.5, 0.6, 3));
    const auto asym = ModelParams::from_pi_theta(0.9, 0.5, 2);
    const auto m = transition_matrix(asym);
    const double err = std::max(
        {matrix_gap(sym, Channel2x2{0.8, 0.2, 0.2, 0.8}),
         std::abs(m.m11 - 0.95), std::abs(m.m21 - 0.45),
         std::abs(asym.delta() + 0.4),
         matrix_gap(m, channel_from_delta(asym.theta(), asym.delta()))});
    r.lines.push_back({"model/examples", err <= 1e-14, "max error " + fmt(err)});
  }
  double stat = 0.0;
  double eig = 0.0;
  double power = 0.0;
  for (const Fixture& f : valid_fixtures()) {
    const auto p = ModelParams::from_pi_theta(f.pi1, f.theta, 2);
    const auto m = transition_matrix(p);
    const auto pi = m.stationary();
    stat = std::max({stat, std::abs(pi[0] - f.pi1),
                     std::abs(f.pi1 - (0.5 - p.delta() / (2 * (1 - f.theta))))});
    eig = std::max(eig, std::abs(m.eigenvalues()[1] - f.theta));
    Channel2x2 acc;
    for (int s = 0; s <= 30; ++s) {
      power = std::max(power, matrix_gap(acc, multistep_matrix(p, s)));
      acc = acc * m;
    }
  }
  r.lines.push_back({"model/stationary-roundtrip", stat <= 1e-12,
                     "max error " + fmt(stat)});
  r.lines.push_back({"model/eigenvalues", eig <= 1e-12,
                     "max error " + fmt(eig)});
  r.lines.push_back({"model/multistep-closed-form", power <= 1e-12,
                     "max error over s<=30 " + fmt(power)});
}

void exact_checks(CheckReport& r) {
  double worst = 0.0;
  double upper = INFINITY;
  double lower = INFINITY;
  double randomized = INFINITY;
  double lower_sym = INFINITY;
  double zslack = INFINITY;
  std::size_t cases = 0;
  for (int d : {2, 3}) {
    for (const Fixture& f : valid_fixtures()) {
      const auto p = ModelParams::from_pi_theta(f.pi1, f.theta, d);
      ExactLaws laws = level_zero();
      for (int n = 0; n <= 3; ++n) {
        IdentityReport rep = exact_identities(p, laws);
        if (n < 3) {
          RecursionResult step =
              recursion_step(p, laws.plus, laws.minus, kExactBudget);
          append_product_identities(rep, p, moments(laws.plus, laws.minus, p),
                                    step.products);
          laws = std::move(step.laws);
        }
        worst = std::max(worst, rep.max_abs_residual());
        upper = std::min(upper, rep.mle_upper_slack);
        lower = std::min(lower, rep.mle_lower_slack);
        randomized = std::min(randomized, rep.randomized_lower_slack);
        if (f.pi1 == 0.5) lower_sym = std::min(lower_sym, rep.mle_lower_slack);
        zslack = std::min(zslack, rep.z_slack);
        ++cases;
      }
    }
  }
  r.lines.push_back({"exact/identity-suite", worst <= 1e-10,
                     std::to_string(cases) + " levels, max residual " +
                         fmt(worst)});
  r.lines.push_back({"exact/ml-success-upper-bound", upper >= -1e-10,
                     "min slack " + fmt(upper)});
  r.lines.push_back({"exact/ml-success-randomized-lower-bound",
                     randomized >= -1e-10, "min slack " + fmt(randomized)});
  r.lines.push_back({"exact/ml-success-lower-bound-symmetric",
                     lower_sym >= -1e-10,
                     "min slack of x + pi1 <= delta at pi1 = 1/2: " +
                         fmt(lower_sym) + " (all fixtures: " + fmt(lower) +
                         ")"});
  r.lines.push_back({"exact/z-between-0-and-x", zslack >= -1e-10,
                     "min slack " + fmt(zslack)});

  double gap = 0.0;
  for (const Fixture& f : valid_fixtures()) {
    const auto p = ModelParams::from_pi_theta(f.pi1, f.theta, 2);
    const auto levels = exact_levels(p, 3, kExactBudget);
    for (int n = 0; n <= 3; ++n) {
      const ExactMoments a = moments(levels[n].plus, levels[n].minus, p);
      const ExactMoments b = leaf_enumeration(p, n);
      gap = std::max({gap, std::abs(a.x_n - b.x_n), std::abs(a.z_n - b.z_n),
                      std::abs(a.delta_n - b.delta_n),
                      std::abs(a.e_x_minus - b.e_x_minus)});
    }
  }
  r.lines.push_back({"exact/atoms-vs-leaf-enumeration", gap <= 1e-10,
                     "max gap " + fmt(gap)});

  const auto p = ModelParams::from_pi_theta(0.6, 0.7, 2);
  const auto levels = exact_levels(p, 3, kExactBudget);
  const ExactMoments m3 = moments(levels[3].plus, levels[3].minus, p);
  const double fix = std::max(
      {std::abs(m3.x_n - 0.16082064490388315),
       std::abs(m3.z_n - 0.074460165444497031),
       std::abs(m3.delta_n - 0.79087188467574554),
       std::abs(m3.e_x_minus - 0.24123096735582295)});
  r.lines.push_back({"exact/regression-fixture", fix <= 1e-10,
                     "d=2 pi1=0.6 theta=0.7 level 3, max gap " + fmt(fix)});
}

void gaussian_checks(CheckReport& r, int order) {
  r.lines.push_back({"gauss/g-at-zero", g_quadrature(0.9, 0.0, order) == 0.0,
                     "g(0) = " + fmt(g_quadrature(0.9, 0.0, order))});
  double conv = 0.0;
  double mono = INFINITY;
  for (double pi1 : {0.5, 0.8, 0.9}) {
    for (double s : uniform_grid(1.0, 100)) {
      conv = std::max(conv,
                      std::abs(g_quadrature(pi1, s, 80) - g_quadrature(pi1, s, 160)));
    }
    double prev = 0.0;
    for (double s : uniform_grid(1.0 - pi1, 200)) {
      const double g = g_quadrature(pi1, s, order);
      mono = std::min(mono, g - prev);
      prev = g;
    }
  }
  r.lines.push_back({"gauss/order-80-vs-160", conv <= 1e-10,
                     "max gap on (0,1] " + fmt(conv)});
  r.lines.push_back({"gauss/increasing", mono > -1e-12,
                     "min adjacent increment " + fmt(mono)});

  bool below = true;
  for (double pi1 : {0.5, 0.6, 0.7}) {
    for (double s : uniform_grid(1.0 - pi1, 200)) {
      below = below && g_quadrature(pi1, s, order) < s;
    }
  }
  bool above = true;
  for (double pi1 : {0.85, 0.9, 0.95}) {
    bool any = false;
    for (double s : uniform_grid(1.0 - pi1, 200)) {
      any = any || g_quadrature(pi1, s, order) > s;
    }
    above = above && any;
  }
  r.lines.push_back({"gauss/regime-dichotomy", below && above,
                     std::string("g<s for pi1 in {0.5,0.6,0.7}: ") +
                         (below ? "yes" : "no") +
                         "; g>s somewhere for pi1 in {0.85,0.9,0.95}: " +
                         (above ? "yes" : "no")});

  std::string detail;
  bool ratio_ok = true;
  for (double pi1 : {0.5, 0.8, 0.9}) {
    const double e2 = std::abs(g_quadrature(pi1, 0.02, order) - g_series(pi1, 0.02));
    const double e1 = std::abs(g_quadrature(pi1, 0.01, order) - g_series(pi1, 0.01));
    const double ratio = e2 / e1;
    ratio_ok = ratio_ok && ratio >= 8.0 && ratio <= 32.0;
    detail += (detail.empty() ? "" : ", ") + fmt(pi1) + ":" + fmt(ratio);
  }
  r.lines.push_back({"gauss/series-remainder-ratio", ratio_ok, detail});
}

void threshold_checks(CheckReport& r, int order) {
  SolverSettings st;
  st.quad_order = order;
  const auto w = omega_star(0.9, st);
  bool ok = w.has_value() && w->omega > 0.0 && w->omega < 1.0;
  double cert = INFINITY;
  if (w) cert = std::abs(g_quadrature(0.9, w->omega * w->s_star, order) - w->s_star);
  ok = ok && cert <= 10 * st.tol && w->s_star > 0 && w->s_star < 0.1;
  r.lines.push_back({"threshold/omega-star-pi1-0.9", ok,
                     w ? "omega* " + fmt(w->omega) + ", s* " + fmt(w->s_star) +
                             ", |g(omega* s*) - s*| " + fmt(cert)
                       : std::string("absent")});
  const bool sym_absent = !omega_star(0.5, st).has_value();
  r.lines.push_back({"threshold/symmetric-absent", sym_absent,
                     sym_absent ? "absent" : "unexpected omega*"});
  const double pb = (1.0 + 1.0 / std::sqrt(3.0)) / 2.0;
  const bool regimes = regime_of(0.5) == Regime::KSTight &&
                       regime_of(0.9) == Regime::KSNotTight &&
                       regime_of(pb) == Regime::Boundary;
  r.lines.push_back({"threshold/regimes", regimes,
                     "0.5 " + to_string(regime_of(0.5)) + ", 0.9 " +
                         to_string(regime_of(0.9)) + ", boundary " +
                         to_string(regime_of(pb))});
}

void de_checks(CheckReport& r, std::uint64_t seed) {
  {
    const auto p = ModelParams::from_pi_theta(0.6, 0.0, 3);
    const SamplePool pool = de_step(p, initial_pool(1000, seed), 1000);
    bool constant = true;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      constant = constant && std::abs(pool.plus[i] - 0.6) < 1e-15 &&
                 std::abs(pool.minus[i] - 0.4) < 1e-15;
    }
    r.lines.push_back({"de/theta-zero", constant,
                       constant ? "pools constant at (pi1, pi2)"
                                : "pool values moved"});
  }
  const auto p = ModelParams::from_pi_theta(0.6, 0.7, 2);
  const auto levels = exact_levels(p, 3, kExactBudget);
  const double exact3 = moments(levels[3].plus, levels[3].minus, p).x_n;
  DeOptions raw;
  raw.recenter_prior = false;
  SamplePool pool = initial_pool(20000, seed);
  for (int n = 0; n < 3; ++n) pool = de_step(p, pool, 20000, raw);
  const PoolMoments m = pool_moments(p, pool);
  const double zscore = (m.x - exact3) / m.x_stderr;
  r.lines.push_back({"de/vs-exact-x3", std::abs(zscore) <= 4.0,
                     "x3 " + fmt(m.x) + " vs " + fmt(exact3) + ", z " +
                         fmt(zscore)});
  const double alt = p.pi2() / p.pi1() * m.e_x_minus;
  const double alt_se = std::hypot(m.x_stderr,
                                   p.pi2() / p.pi1() * m.e_x_minus_stderr);
  const bool identities = std::abs(m.x - alt) <= 3 * alt_se &&
                     m.z <= m.x + 3 * std::hypot(m.x_stderr, m.z_stderr);
  r.lines.push_back({"de/pool-identities", identities,
                     "x " + fmt(m.x) + " vs (pi2/pi1) E(X- - pi2) " + fmt(alt)});
  const YMoment y = y_first_moment(p, pool);
  const bool ymom = std::abs(y.mean - p.theta() * m.x) <=
                    3 * std::hypot(y.stderr, p.theta() * m.x_stderr);
  r.lines.push_back({"de/y-moment", ymom,
                     "E(Y - pi1) " + fmt(y.mean) + " vs theta x " +
                         fmt(p.theta() * m.x)});
  const BpEstimate bp = broadcast_bp_estimate(p, 3, 4000, seed);
  const double bz = (bp.x_n - exact3) / bp.stderr;
  r.lines.push_back({"de/broadcast-vs-exact-x3", std::abs(bz) <= 4.0,
                     "x3 " + fmt(bp.x_n) + ", z " + fmt(bz)});
}

}  // namespace

CheckReport run_invariant_suite(const CheckSettings& settings) {
  CheckReport r;
  model_checks(r);
  exact_checks(r);
  gaussian_checks(r, settings.quad_order);
  threshold_checks(r, settings.quad_order);
  de_checks(r, settings.seed);
  return r;
}

}  // namespace treecast
