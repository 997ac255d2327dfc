#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "tdsim/dynamics/scenario.hpp"
#include "tdsim/netmodel/network.hpp"

namespace tdsim::cli {

// tdsim <subcommand> [flags] <model>
//   validate <model>
//   build-hybrid [--mode unified|coupled] [--out dir] [transmission model]
//   pf [--mode] [--tol] [--jobs] [--out] <model>
//   dyn [--mode] [--tol] [--jobs] [--scenario] [--out] <model>
//   report imbalance [--mode] [--tol] [--jobs] [--scope] [--out] <model>
//   report sag [--mode] [--tol] [--jobs] [--scenario] [--out] <model>
// Exit 0 on success, 1 on domain errors (one JSON error record on err),
// 2 on usage errors. Output files are written only after every step has
// succeeded.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// The default hybrid: twelve substations with eight embedded IEEE 123
// feeders each, detailed layout at bus 12. Boundary-paired unless `unified`.
netmodel::Network default_hybrid(const netmodel::Network& transmission, bool unified = false);
netmodel::Network default_hybrid(bool unified = false);

// The single-line-to-ground fault scenario at substation 12.
dynamics::DynamicScenario default_scenario();

}  // namespace tdsim::cli
