#pragma once

#include <string>
#include <string_view>

#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/netmodel/network.hpp"
#include "tdsim/powerflow/solution.hpp"

namespace tdsim::test {

using netmodel::Network;
using numerics::Phasor;
using numerics::PhaseTriple;
using powerflow::PowerFlowSolution;

std::string data_path(std::string_view file);

// Shared models, loaded once per test binary.
const Network& ieee39();
const Network& ieee123();
const netmodel::SubstationTemplate& standard_substation();
const netmodel::SubstationTemplate& detailed_substation();

// Default hybrid (boundary-paired) and its two coupling-mode solutions.
const Network& default_hybrid();
const PowerFlowSolution& hybrid_unified();
const PowerFlowSolution& hybrid_coupled();

// Per-unit bases of a bus at system base `mva`: per-phase power and
// line-to-neutral voltage.
double phase_kva(double mva);
double phase_kv(double kv_ll);
double impedance_base_ohm(double kv_ll, double mva);

// Radial circuit: source at "S" (1 pu, phases of `phases`), one line to "L"
// with per-unit series impedance z on every listed phase (no mutuals), and
// a wye load of s_pu per phase at L.
Network two_bus_feeder(Phasor z_pu, Phasor s_pu, std::string_view phases = "A",
                       netmodel::LoadComposition model = {});

// Transmission pair: slack generator at "1" holding 1 pu, balanced line to
// "2" with z1 = z0 = z_pu, balanced constant-power load of s_pu per phase.
Network two_bus_transmission(Phasor z_pu, Phasor s_pu);

}  // namespace tdsim::test
