// Command-line front end: treecast <mode> [flags].

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treecast/app.hpp"
#include "treecast/config.hpp"
#include "treecast/errors.hpp"

namespace {

struct Flag {
  const char* names;
  const char* key;
  const char* help;
  std::optional<std::string> value;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broadcasting on d-ary trees with the asymmetric binary "
               "channel: exact laws, density evolution, Gaussian limit and "
               "reconstruction thresholds."};
  app.require_subcommand(1);

  std::vector<Flag> flags{
      {"--pi1", "pi1", "stationary probability of state 1, in [1/2, 1)", {}},
      {"--theta", "theta", "second eigenvalue of the channel", {}},
      {"--d-theta-sq", "d_theta_sq", "d * theta^2 (theta > 0 unless theta_sign=-1)", {}},
      {"--d", "d", "branching factor", {}},
      {"--n-max,--n", "n_max", "deepest level", {}},
      {"--pool", "pool", "density-evolution pool size", {}},
      {"--seed", "seed", "random seed", {}},
      {"--quad-order", "quad_order", "Gauss-Hermite order", {}},
      {"--tol", "tol", "threshold solver tolerance", {}},
      {"--out", "out", "output directory", {}},
  };
  std::vector<CLI::Option*> opts;
  for (Flag& f : flags) opts.push_back(app.add_option(f.names, f.value, f.help));
  opts[1]->excludes(opts[2]);

  std::string config_path;
  app.add_option("--config", config_path, "flat key=value config file");
  std::vector<std::string> extra;
  app.add_option("--set", extra, "extra key=value setting (repeatable)");

  std::vector<std::pair<std::string, CLI::App*>> modes;
  for (const char* name :
       {"exact", "de", "bp", "gfunc", "threshold", "sweep", "check"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();
    modes.emplace_back(name, sub);
  }
  modes[0].second->description("exact laws and moments for small d, n");
  modes[1].second->description("density-evolution trajectory");
  modes[2].second->description("broadcast-then-BP estimate of x_n");
  modes[3].second->description("grid of the Gaussian-limit function g(s)");
  modes[4].second->description("regime and omega* solver");
  modes[5].second->description("phase diagram over (pi1, d theta^2)");
  modes[6].second->description("invariant suite; nonzero exit on failure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    treecast::RunConfig cfg;
    if (!config_path.empty()) treecast::apply_config_file(cfg, config_path);
    for (const auto& [name, sub] : modes) {
      if (sub->parsed()) cfg.mode = treecast::parse_mode(name);
    }
    for (const Flag& f : flags) {
      if (f.value) cfg.set(f.key, *f.value);
    }
    for (const std::string& kv : extra) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw treecast::ConfigError("--set expects key=value, got '" + kv + "'");
      }
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return treecast::run(cfg, std::cout);
  } catch (const treecast::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const treecast::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const treecast::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
