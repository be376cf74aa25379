#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "treecast/app.hpp"
#include "treecast/config.hpp"
#include "treecast/errors.hpp"
#include "treecast/report_io.hpp"

using namespace treecast;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("treecast_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config text parsing") {
  RunConfig cfg;
  std::istringstream text(
      "# comment\n"
      "pi1 = 0.9   # trailing\n"
      "d-theta-sq = 0.8\n"
      "\n"
      "d = 500\n"
      "sweep_pi1 = 0.8, 0.9\n"
      "recenter = false\n");
  apply_config_text(cfg, text);
  CHECK(cfg.pi1 == 0.9);
  CHECK(cfg.d_theta_sq == 0.8);
  CHECK_FALSE(cfg.theta.has_value());
  CHECK(cfg.d == 500);
  CHECK(cfg.sweep_pi1 == std::vector<double>{0.8, 0.9});
  CHECK_FALSE(cfg.recenter);
  CHECK(cfg.model().d_theta_sq() == doctest::Approx(0.8));
}

TEST_CASE("config errors") {
  RunConfig cfg;
  std::istringstream both("theta = 0.5\nd_theta_sq = 0.8\n");
  CHECK_THROWS_AS(apply_config_text(cfg, both), ConfigError);
  std::istringstream no_eq("pi1 0.9\n");
  CHECK_THROWS_AS(apply_config_text(cfg, no_eq), ConfigError);
  CHECK_THROWS_AS(cfg.set("bogus", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("pi1", "abc"), ConfigError);
  CHECK_THROWS_AS(cfg.set("d", "2.5"), ConfigError);
  CHECK_THROWS_AS(cfg.set("recenter", "maybe"), ConfigError);
  CHECK_THROWS_AS(cfg.set("theta_sign", "2"), ConfigError);
  CHECK_THROWS_AS(parse_mode("walk"), ConfigError);
  CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/treecast.cfg"), ConfigError);
}

TEST_CASE("later settings override earlier ones") {
  RunConfig cfg;
  std::istringstream text("theta = 0.5\nseed = 4\n");
  apply_config_text(cfg, text);
  cfg.set("d_theta_sq", "0.9");
  CHECK_FALSE(cfg.theta.has_value());
  cfg.set("theta", "0.3");
  CHECK_FALSE(cfg.d_theta_sq.has_value());
  CHECK(cfg.seed == 4);
  cfg.set("n", "7");
  CHECK(cfg.effective_n_max() == 7);
}

TEST_CASE("mode-dependent depth defaults") {
  RunConfig cfg;
  cfg.mode = Mode::De;
  CHECK(cfg.effective_n_max() == 50);
  cfg.mode = Mode::Sweep;
  CHECK(cfg.effective_n_max() == 60);
  cfg.mode = Mode::Exact;
  CHECK(cfg.effective_n_max() == 3);
}

TEST_CASE("config hash") {
  RunConfig a;
  RunConfig b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.out = "/elsewhere";
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  // Text written differently but equal in value hashes the same.
  RunConfig c;
  c.set("pi1", "0.60");
  CHECK(a.hash() == c.hash());
}

TEST_CASE("phase diagram CSV") {
  PhaseRow tight;
  tight.pi1 = 0.5;
  tight.d_theta_sq = 0.9;
  tight.d = 500;
  tight.regime = Regime::KSTight;
  tight.classification = Classification::NonReconstruction;
  PhaseRow loose = tight;
  loose.pi1 = 0.9;
  loose.regime = Regime::KSNotTight;
  loose.omega_star = 0.8;
  loose.x_tail = 0.03;
  loose.classification = Classification::Reconstruction;
  std::ostringstream out;
  write_phase_diagram_csv(out, {tight, loose});
  CHECK(out.str() ==
        "pi1,d_theta_sq,d,regime,omega_star,x_tail,x_tail_stderr,classification\n"
        "0.5,0.9,500,KSTight,,0,0,NonReconstruction\n"
        "0.9,0.9,500,KSNotTight,0.8,0.03,0,Reconstruction\n");

  const fs::path dir = scratch("phase");
  CHECK_THROWS_AS(emit_phase_diagram(dir / "p.csv", {}), ConfigError);
  emit_phase_diagram(dir / "nested" / "p.csv", {tight});
  CHECK(slurp(dir / "nested" / "p.csv").size() > 0);
  std::ofstream(dir / "blocker") << "x";
  CHECK_THROWS_AS(emit_phase_diagram(dir / "blocker" / "p.csv", {tight}), IOFailure);
  fs::remove_all(dir);
}

TEST_CASE("tail mean") {
  Trajectory t;
  for (int n = 0; n < 10; ++n) {
    LevelRecord r;
    r.x = n < 5 ? 1.0 : 0.2;
    r.x_stderr = 0.1;
    t.levels.push_back(r);
  }
  const auto [m, se] = tail_mean(t, 5);
  CHECK(m == doctest::Approx(0.2));
  CHECK(se == doctest::Approx(0.1 / std::sqrt(5.0)));
}

TEST_CASE("sidecar records the configuration") {
  const fs::path dir = scratch("sidecar");
  RunConfig cfg;
  cfg.seed = 17;
  write_sidecar(dir / "a.meta.json", cfg, "a.csv", {{"extra", 3}});
  const auto j = nlohmann::json::parse(slurp(dir / "a.meta.json"));
  CHECK(j["artifact"] == "a.csv");
  CHECK(j["config_hash"] == cfg.hash());
  CHECK(j["seed"] == 17);
  CHECK(j["config"]["pi1"] == "0.6");
  CHECK(j["extra"] == 3);
  CHECK_FALSE(j["config"].contains("out"));
  fs::remove_all(dir);
}

TEST_CASE("exact mode writes the fixture values") {
  const fs::path dir = scratch("exact_mode");
  RunConfig cfg;
  cfg.mode = Mode::Exact;
  cfg.set("pi1", "0.6");
  cfg.set("theta", "0.7");
  cfg.set("d", "2");
  cfg.out = dir.string();
  std::ostringstream log;
  CHECK(run(cfg, log) == 0);
  const std::string produced = slurp(dir / "exact_moments.csv");
  const std::string fixture =
      slurp(fs::path(TREECAST_FIXTURE_DIR) / "exact_d2_n3_pi0.6_theta0.7.csv");
  std::istringstream a(produced);
  std::istringstream b(fixture);
  std::string la;
  std::string lb;
  std::getline(a, la);
  std::getline(b, lb);
  CHECK(la == lb);
  int rows = 0;
  while (std::getline(b, lb)) {
    REQUIRE(static_cast<bool>(std::getline(a, la)));
    std::replace(la.begin(), la.end(), ',', ' ');
    std::replace(lb.begin(), lb.end(), ',', ' ');
    std::istringstream sa(la);
    std::istringstream sb(lb);
    double va = 0;
    double vb = 0;
    while (sb >> vb) {
      REQUIRE(static_cast<bool>(sa >> va));
      CHECK(std::abs(va - vb) <= 1e-10);
    }
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(fs::exists(dir / "atoms_plus.csv"));
  CHECK(fs::exists(dir / "atoms_minus.csv"));
  const auto meta = nlohmann::json::parse(slurp(dir / "exact_moments.meta.json"));
  CHECK(meta["max_identity_residual"].get<double>() < 1e-10);
  fs::remove_all(dir);
}

TEST_CASE("gfunc and threshold modes") {
  const fs::path dir = scratch("modes");
  RunConfig cfg;
  cfg.out = dir.string();
  cfg.pi1 = 0.9;
  cfg.grid_points = 20;
  cfg.mode = Mode::Gfunc;
  std::ostringstream log;
  CHECK(run(cfg, log) == 0);
  const std::string g = slurp(dir / "gfunc.csv");
  CHECK(std::count(g.begin(), g.end(), '\n') == 21);
  cfg.mode = Mode::Threshold;
  CHECK(run(cfg, log) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "threshold.json"));
  CHECK(j["regime"] == "KSNotTight");
  CHECK(j["theta"].size() == 3);
  fs::remove_all(dir);
}
