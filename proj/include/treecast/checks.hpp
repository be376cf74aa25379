#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace treecast {

struct CheckLine {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckLine> lines;

  bool all_ok() const;
  /// One "PASS|FAIL name: detail" line per check, then a summary line.
  void write(std::ostream& out) const;
};

struct CheckSettings {
  std::uint64_t seed = 1;
  int quad_order = 80;
};

/// The invariant suite behind the `check` mode: model algebra, exact
/// identities and oracle agreement, Gaussian-limit properties, threshold
/// solver certificates and small density-evolution consistency checks.
/// Deterministic for fixed settings.
CheckReport run_invariant_suite(const CheckSettings& settings = {});

}  // namespace treecast
