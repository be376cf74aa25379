#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "treecast/errors.hpp"
#include "treecast/exact_oracle.hpp"

using namespace treecast;

namespace {

constexpr std::size_t kBudget = 5'000'000;

struct FixtureRow {
  int level;
  double x, z, delta, e_x_minus;
};

std::vector<FixtureRow> read_fixture(const std::string& name) {
  std::ifstream in(std::string(TREECAST_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "level,x,z,delta,e_x_minus");
  std::vector<FixtureRow> rows;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    FixtureRow r{};
    ss >> r.level >> r.x >> r.z >> r.delta >> r.e_x_minus;
    rows.push_back(r);
  }
  return rows;
}

ExactMoments at_level(const ModelParams& p, int n) {
  const auto levels = exact_levels(p, n, kBudget);
  return moments(levels[n].plus, levels[n].minus, p);
}

}  // namespace

TEST_CASE("level zero is the root itself") {
  const auto p = ModelParams::from_pi_theta(0.75, 0.3, 2);
  const ExactLaws l = level_zero();
  const ExactMoments m = moments(l.plus, l.minus, p);
  CHECK(m.x_n == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.delta_n == 1.0);
  CHECK(m.z_n == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("theta zero carries no information") {
  const auto p = ModelParams::from_pi_theta(0.6, 0.0, 3);
  const ExactMoments m = at_level(p, 2);
  CHECK(std::abs(m.x_n) < 1e-15);
  CHECK(std::abs(m.delta_n - 0.6) < 1e-15);
}

TEST_CASE("near-noiseless channel keeps the root") {
  const auto p = ModelParams::from_pi_theta(0.6, 1.0 - 1e-9, 2);
  const ExactMoments m = at_level(p, 2);
  CHECK(std::abs(m.x_n - 0.4) < 1e-6);
  CHECK(std::abs(m.delta_n - 1.0) < 1e-6);
}

TEST_CASE("d=2 level-1 law has three atoms") {
  const auto p = ModelParams::from_pi_theta(0.6, 0.7, 2);
  const auto levels = exact_levels(p, 1, kBudget);
  const auto atoms = levels[1].plus.atoms();
  REQUIRE(atoms.size() == 3);
  const double want[3][2] = {{0.031123919308357, 0.0144},
                             {0.51764705882352902, 0.2112},
                             {0.97286432160804004, 0.7744}};
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(atoms[i].value - want[i][0]) < 1e-12);
    CHECK(std::abs(atoms[i].prob - want[i][1]) < 1e-12);
  }
}

TEST_CASE("regression fixture against recursion and leaf enumeration") {
  const auto p = ModelParams::from_pi_theta(0.6, 0.7, 2);
  const auto rows = read_fixture("exact_d2_n3_pi0.6_theta0.7.csv");
  REQUIRE(rows.size() == 4);
  const auto levels = exact_levels(p, 3, kBudget);
  for (const FixtureRow& r : rows) {
    CAPTURE(r.level);
    const ExactMoments a = moments(levels[r.level].plus, levels[r.level].minus, p);
    const ExactMoments b = leaf_enumeration(p, r.level);
    for (const ExactMoments& m : {a, b}) {
      CHECK(std::abs(m.x_n - r.x) < 1e-10);
      CHECK(std::abs(m.z_n - r.z) < 1e-10);
      CHECK(std::abs(m.delta_n - r.delta) < 1e-10);
      CHECK(std::abs(m.e_x_minus - r.e_x_minus) < 1e-10);
    }
  }
}

TEST_CASE("values from the independent brute force") {
  // Produced by tests/oracles/leaf_bruteforce.py.
  {
    const auto p = ModelParams::from_pi_theta(0.75, -0.3, 3);
    const ExactMoments m1 = at_level(p, 1);
    CHECK(std::abs(m1.x_n - 0.072704173702035413) < 1e-12);
    CHECK(std::abs(m1.z_n - 0.052237256163562826) < 1e-12);
    CHECK(std::abs(m1.delta_n - 0.75105468750000004) < 1e-12);
    CHECK(std::abs(at_level(p, 2).x_n - 0.019321981946937572) < 1e-12);
  }
  {
    const auto p = ModelParams::from_pi_theta(0.75, -0.3, 2);
    const ExactMoments m1 = at_level(p, 1);
    CHECK(std::abs(m1.x_n - 0.047227713040724373) < 1e-12);
    CHECK(std::abs(m1.delta_n - 0.75) < 1e-12);
  }
  {
    const auto p = ModelParams::from_pi_theta(0.9, 0.7, 2);
    const ExactMoments m1 = at_level(p, 1);
    CHECK(std::abs(m1.x_n - 0.066090846272888859) < 1e-12);
    CHECK(std::abs(m1.delta_n - 0.95248) < 1e-12);
  }
}

TEST_CASE("property: identities over the fixture grid") {
  for (int d : {2, 3}) {
    for (double pi1 : {0.5, 0.6, 0.75, 0.9}) {
      for (double theta : {0.3, -0.3, 0.7, -0.7}) {
        ModelParams p = ModelParams::from_pi_theta(0.5, 0.3, 2);
        try {
          p = ModelParams::from_pi_theta(pi1, theta, d);
        } catch (const ConstraintViolation&) {
          continue;
        }
        CAPTURE(d);
        CAPTURE(pi1);
        CAPTURE(theta);
        ExactLaws laws = level_zero();
        for (int n = 0; n <= 3; ++n) {
          IdentityReport rep = exact_identities(p, laws);
          if (n < 3) {
            RecursionResult step = recursion_step(p, laws.plus, laws.minus, kBudget);
            append_product_identities(rep, p, moments(laws.plus, laws.minus, p),
                                      step.products);
            laws = std::move(step.laws);
          }
          for (const auto& [name, res] : rep.residuals) {
            CAPTURE(name);
            CHECK(std::abs(res) <= 1e-10);
          }
          CHECK(rep.mle_upper_slack >= -1e-10);
          CHECK(rep.randomized_lower_slack >= -1e-10);
          CHECK(rep.z_slack >= -1e-10);
          if (pi1 == 0.5) CHECK(rep.mle_lower_slack >= -1e-10);
        }
      }
    }
  }
}

TEST_CASE("x + pi1 exceeds the ML success when pi1 > pi2") {
  // One level, d=2, pi1=0.9, theta=0.7: the ML rule guesses state 1 on every
  // leaf pattern except two 2-leaves, while x + pi1 counts a randomized guess.
  const auto p = ModelParams::from_pi_theta(0.9, 0.7, 2);
  const auto levels = exact_levels(p, 1, kBudget);
  const IdentityReport rep = exact_identities(p, levels[1]);
  CHECK(rep.mle_lower_slack < -0.01);
  CHECK(rep.randomized_lower_slack >= 0.0);
}

TEST_CASE("budget and level errors") {
  const auto p = ModelParams::from_pi_theta(0.6, 0.7, 3);
  const auto levels = exact_levels(p, 2, kBudget);
  CHECK_THROWS_AS(recursion_step(p, levels[2].plus, levels[2].minus, 10),
                  BudgetExceeded);
  CHECK_THROWS_AS(recursion_step(p, levels[2].plus, levels[1].minus, kBudget),
                  LevelMismatch);
  CHECK_THROWS_AS(leaf_enumeration(ModelParams::from_pi_theta(0.6, 0.7, 3), 20),
                  BudgetExceeded);
  CHECK_THROWS_AS(leaf_enumeration(p, -1), ConstraintViolation);
}

TEST_CASE("atom CSV round trip") {
  const auto p = ModelParams::from_pi_theta(0.75, -0.3, 3);
  const auto levels = exact_levels(p, 2, kBudget);
  std::stringstream buf;
  write_atoms_csv(buf, levels[2].plus);
  const AtomDistribution back = read_atoms_csv(buf, 2);
  REQUIRE(back.size() == levels[2].plus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.atoms()[i].value == levels[2].plus.atoms()[i].value);
    CHECK(back.atoms()[i].prob == levels[2].plus.atoms()[i].prob);
  }
  std::stringstream bad("value,prob\n0.5;1\n");
  CHECK_THROWS_AS(read_atoms_csv(bad, 0), IOFailure);
  std::stringstream headerless("0.5,1\n");
  CHECK_THROWS_AS(read_atoms_csv(headerless, 0), IOFailure);
}

TEST_CASE("atom validation") {
  CHECK_THROWS_AS(AtomDistribution({{1.5, 1.0}}, 0), ConstraintViolation);
  CHECK_THROWS_AS(AtomDistribution({{0.5, NAN}}, 0), NonFinite);
  CHECK_THROWS_AS(AtomDistribution({{0.5, 0.5}}, 0), PrecisionLoss);
}

TEST_CASE("quadratic expansion residual is higher order") {
  // Residual after the linear and quadratic terms shrinks like x^3.
  const auto p = ModelParams::from_pi_theta(0.5, 0.55, 2);
  std::vector<ExactMoments> ms;
  const auto levels = exact_levels(p, 4, kBudget);
  for (const ExactLaws& l : levels) ms.push_back(moments(l.plus, l.minus, p));
  for (int n = 1; n + 1 < static_cast<int>(ms.size()); ++n) {
    const double r = main_expansion_residual(p, ms[n].x_n, ms[n + 1].x_n);
    CHECK(std::abs(r) <= 10.0 * std::pow(ms[n].x_n, 3));
  }
}

TEST_CASE("property: random channels keep laws normalized") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> upi(0.5, 0.95);
  std::uniform_real_distribution<double> uth(-0.9, 0.9);
  int done = 0;
  while (done < 40) {
    const double pi1 = upi(gen);
    const double theta = uth(gen);
    if (std::abs(theta) + std::abs((1 - theta) * (1 - 2 * pi1)) > 1.0) continue;
    const auto p = ModelParams::from_pi_theta(pi1, theta, 2 + done % 2);
    const auto levels = exact_levels(p, 2, kBudget);
    for (const ExactLaws& l : levels) {
      double mass = 0.0;
      for (const Atom& a : l.plus.atoms()) {
        CHECK(a.value >= 0.0);
        CHECK(a.value <= 1.0);
        mass += a.prob;
      }
      CHECK(std::abs(mass - 1.0) < 1e-12);
      CHECK(exact_identities(p, l).max_abs_residual() < 1e-10);
    }
    ++done;
  }
}
