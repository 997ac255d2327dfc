#include "fixtures.hpp"

#include <cmath>

#include "tdsim/cli/run.hpp"
#include "tdsim/netmodel/model_io.hpp"
#include "tdsim/powerflow/coupled.hpp"

#ifndef TDSIM_DATA_DIR
#error "TDSIM_DATA_DIR must point at the data directory"
#endif

namespace tdsim::test {

using namespace netmodel;

std::string data_path(std::string_view file) { return std::string(TDSIM_DATA_DIR) + "/" + std::string(file); }

const Network& ieee39() {
    static const Network net = load_network(data_path("ieee39.json"));
    return net;
}

const Network& ieee123() {
    static const Network net = load_network(data_path("ieee123.json"));
    return net;
}

const SubstationTemplate& standard_substation() {
    static const SubstationTemplate t = parse_substation_template(read_text_file(data_path("substation_standard.json")));
    return t;
}

const SubstationTemplate& detailed_substation() {
    static const SubstationTemplate t = parse_substation_template(read_text_file(data_path("substation_detailed.json")));
    return t;
}

const Network& default_hybrid() {
    static const Network net = cli::default_hybrid(ieee39(), false);
    return net;
}

const PowerFlowSolution& hybrid_unified() {
    static const PowerFlowSolution sol = powerflow::solve(default_hybrid(), {});
    return sol;
}

const PowerFlowSolution& hybrid_coupled() {
    static const PowerFlowSolution sol = [] {
        powerflow::PowerFlowOptions o;
        o.mode = powerflow::CouplingMode::Coupled;
        return powerflow::solve(default_hybrid(), o);
    }();
    return sol;
}

double phase_kva(double mva) { return mva * 1000.0 / 3.0; }
double phase_kv(double kv_ll) { return kv_ll / std::sqrt(3.0); }
double impedance_base_ohm(double kv_ll, double mva) { return kv_ll * kv_ll / mva; }

Network two_bus_feeder(Phasor z_pu, Phasor s_pu, std::string_view phases, LoadComposition model) {
    Network net;
    net.name = "two_bus_feeder";
    const double kv = 4.16;
    const PhaseSet ph = PhaseSet::parse(phases);
    net.buses = {{"S", ph, kv, BusKind::Distribution}, {"L", ph, kv, BusKind::Distribution}};
    Branch line;
    line.id = "LN";
    line.from = "S";
    line.to = "L";
    line.phases = ph;
    line.z_series = PhaseMatrix(ph.size());
    line.y_shunt = PhaseMatrix(ph.size());
    for (std::size_t i = 0; i < ph.size(); ++i) line.z_series(i, i) = z_pu * impedance_base_ohm(kv, net.mva_base);
    net.branches = {line};
    Load load;
    load.id = "LD";
    load.bus = "L";
    load.phases = ph;
    load.model = model;
    load.kv = phase_kv(kv);
    for (std::size_t i = 0; i < ph.size(); ++i) {
        load.kw.push_back(s_pu.real() * phase_kva(net.mva_base));
        load.kvar.push_back(s_pu.imag() * phase_kva(net.mva_base));
    }
    net.loads = {load};
    Source src;
    src.id = "SRC";
    src.bus = "S";
    src.phases = ph;
    src.voltage = numerics::balanced(1.0);
    net.sources = {src};
    net.reindex();
    return net;
}

Network two_bus_transmission(Phasor z_pu, Phasor s_pu) {
    Network net;
    net.name = "two_bus_transmission";
    const double kv = 115.0;
    net.buses = {{"1", PhaseSet::abc(), kv, BusKind::Transmission}, {"2", PhaseSet::abc(), kv, BusKind::Transmission}};
    Branch line;
    line.id = "L12";
    line.from = "1";
    line.to = "2";
    line.phases = PhaseSet::abc();
    const Phasor z = z_pu * impedance_base_ohm(kv, net.mva_base);
    line.z_series = three_phase_from_sequence(z, z, 1.0);
    line.y_shunt = PhaseMatrix(3);
    net.branches = {line};
    Load load;
    load.id = "LD2";
    load.bus = "2";
    load.phases = PhaseSet::abc();
    load.kv = phase_kv(kv);
    load.kw.assign(3, s_pu.real() * phase_kva(net.mva_base));
    load.kvar.assign(3, s_pu.imag() * phase_kva(net.mva_base));
    net.loads = {load};
    Generator g;
    g.id = "G1";
    g.bus = "1";
    g.role = GeneratorRole::Slack;
    g.v_pu = 1.0;
    g.x_internal_pu = 0.05;
    net.generators = {g};
    net.reindex();
    return net;
}

}  // namespace tdsim::test
