#pragma once

#include <iosfwd>

#include "treecast/config.hpp"

namespace treecast {

/// Executes one mode, writing artifacts under cfg.out and a short summary
/// to `log`. Returns the process exit status (nonzero when `check` finds a
/// violation). Library errors propagate as exceptions.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace treecast
