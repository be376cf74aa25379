#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "treecast/errors.hpp"
#include "treecast/gaussian_limit.hpp"
#include "treecast/threshold.hpp"

using namespace treecast;

namespace {

const double kBoundaryPi1 = (1.0 + 1.0 / std::sqrt(3.0)) / 2.0;

// Frozen solver output at the default settings.
constexpr double kOmegaStar09 = 0.8363447190967608;

Trajectory flat(double x, int levels) {
  Trajectory t;
  for (int n = 0; n < levels; ++n) {
    LevelRecord r;
    r.level = n;
    r.x = x;
    r.x_stderr = 1e-5;
    t.levels.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("excess signs") {
  CHECK(excess(0.9, 1e-6).max_excess < 0.0);
  CHECK(excess(0.5, 1.0).max_excess < 0.0);
  const Excess e = excess(0.9, 1.0);
  CHECK(e.max_excess > 0.0);
  CHECK(e.argmax_s > 0.0);
  CHECK(e.argmax_s <= 0.1);
  SolverSettings coarse;
  coarse.grid_size = 100;
  CHECK_THROWS_AS(excess(0.9, 1.0, coarse), ConstraintViolation);
  CHECK_THROWS_AS(excess(0.9, 0.0), ConstraintViolation);
  CHECK_THROWS_AS(excess(0.9, 1.6), ConstraintViolation);
}

TEST_CASE("excess is monotone in omega") {
  for (double pi1 : {0.5, 0.8, 0.9}) {
    double prev = -INFINITY;
    for (int k = 1; k <= 15; ++k) {
      const double e = excess(pi1, 0.1 * k).max_excess;
      CHECK(e >= prev - 1e-10);
      prev = e;
    }
  }
}

TEST_CASE("omega star for pi1 = 0.9") {
  const auto w = omega_star(0.9);
  REQUIRE(w.has_value());
  CHECK(w->omega > 0.0);
  CHECK(w->omega < 1.0);
  CHECK(std::abs(w->omega - kOmegaStar09) <= 1e-6);
  CHECK(w->s_star > 0.0);
  CHECK(w->s_star < 0.1);
  CHECK(std::abs(g_quadrature(0.9, w->omega * w->s_star) - w->s_star) <= 1e-5);
}

TEST_CASE("omega star is stable under solver refinement") {
  const double base = omega_star(0.9)->omega;
  SolverSettings order;
  order.quad_order = 160;
  SolverSettings grid;
  grid.grid_size = 800;
  SolverSettings tol;
  tol.tol = 3e-6;
  for (const SolverSettings& st : {order, grid, tol}) {
    const auto w = omega_star(0.9, st);
    REQUIRE(w.has_value());
    CHECK(std::abs(w->omega - base) <= 1e-4);
  }
}

TEST_CASE("omega star absent when the bound is tight") {
  CHECK_FALSE(omega_star(0.5).has_value());
  CHECK_FALSE(omega_star(0.7).has_value());
  SolverSettings loose;
  loose.tol = 1e-7;
  CHECK_THROWS_AS(omega_star(0.9, loose), ConstraintViolation);
}

TEST_CASE("omega star rises toward 1 as pi1 pi2 approaches 1/6") {
  double prev = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double pi1 = 0.95 - k * (0.95 - 0.80) / 9.0;
    const auto w = omega_star(pi1);
    CAPTURE(pi1);
    REQUIRE(w.has_value());
    CHECK(w->omega > prev - 1e-6);
    CHECK(w->omega < 1.0);
    prev = w->omega;
  }
  CHECK(prev > 0.99);
}

TEST_CASE("regimes") {
  CHECK(regime_of(0.5) == Regime::KSTight);
  CHECK(regime_of(0.9) == Regime::KSNotTight);
  CHECK(regime_of(kBoundaryPi1) == Regime::Boundary);
  const ThresholdReport b = classify_regime(kBoundaryPi1);
  CHECK(b.regime == Regime::Boundary);
  CHECK_FALSE(b.omega_star.has_value());
  const ThresholdReport t = classify_regime(0.5, {100});
  CHECK_FALSE(t.omega_star.has_value());
  REQUIRE(t.thetas.size() == 1);
  CHECK(t.thetas[0].ks_theta == doctest::Approx(0.1));
  CHECK_FALSE(t.thetas[0].theta_plus.has_value());
  CHECK_THROWS_AS(classify_regime(0.3), ConstraintViolation);
}

TEST_CASE("report for pi1 = 0.9 and its JSON form") {
  const ThresholdReport r = classify_regime(0.9, {100, 500});
  REQUIRE(r.omega_star.has_value());
  REQUIRE(r.certificate.has_value());
  CHECK(*r.certificate <= 10 * r.settings.tol);
  CHECK(*r.thetas[1].theta_plus ==
        doctest::Approx(std::sqrt(*r.omega_star / 500)));
  std::ostringstream out;
  write_threshold_json(out, r);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["regime"] == "KSNotTight");
  CHECK(j["omega_star"].get<double>() == *r.omega_star);
  CHECK(j["certificate"]["holds"] == true);
  CHECK(j["theta"].size() == 2);

  std::ostringstream sym;
  write_threshold_json(sym, classify_regime(0.5));
  CHECK(nlohmann::json::parse(sym.str())["omega_star"].is_null());
}

TEST_CASE("finite-d check against a stubbed trajectory source") {
  const ThresholdReport r = classify_regime(0.9);
  const double w = *r.omega_star;
  const auto above = ModelParams::from_d_theta_sq(0.9, w + 0.05, 500);
  const auto below = ModelParams::from_d_theta_sq(0.9, w - 0.05, 500);
  const TrajectorySource plateau = [](const ModelParams&) { return flat(0.03, 60); };
  const TrajectorySource zero = [](const ModelParams&) { return flat(0.0, 60); };
  const FiniteDCheck a = finite_d_check(above, r, plateau);
  CHECK(a.predicted == Classification::Reconstruction);
  CHECK(a.agree);
  CHECK(finite_d_check(below, r, zero).agree);
  CHECK_FALSE(finite_d_check(below, r, plateau).agree);
  CHECK(predicted_classification(classify_regime(0.5), 0.99) ==
        Classification::NonReconstruction);
  CHECK(predicted_classification(classify_regime(kBoundaryPi1), 0.99) ==
        Classification::Undecided);
}
