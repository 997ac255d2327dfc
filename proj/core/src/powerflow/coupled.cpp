#include "tdsim/powerflow/coupled.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "tdsim/error.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/powerflow/fbs.hpp"

namespace tdsim::powerflow {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(count, jobs > 0 ? static_cast<std::size_t>(jobs) : static_cast<std::size_t>(hw));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Whole-model solution from the transmission part and every circuit.
PowerFlowSolution assemble(const Network& net, const PowerFlowSolution& tx,
                           const std::vector<netmodel::BoundaryCircuit>& circuits,
                           const std::vector<PowerFlowSolution>& parts) {
    PowerFlowSolution sol;
    for (const auto& b : net.buses) {
        sol.bus_ids.push_back(b.id);
        sol.bus_phases.push_back(b.phases);
    }
    sol.voltage.assign(net.buses.size(), PhaseTriple{});
    sol.mismatch.assign(net.buses.size(), PhaseTriple{});
    sol.demand.assign(net.buses.size(), PhaseTriple{});
    for (const auto& br : net.branches) sol.branch_ids.push_back(br.id);
    sol.current_from.assign(net.branches.size(), PhaseTriple{});
    sol.current_to.assign(net.branches.size(), PhaseTriple{});
    auto merge = [&](const PowerFlowSolution& part) {
        for (std::size_t i = 0; i < part.bus_ids.size(); ++i) {
            const auto b = net.bus_index(part.bus_ids[i]);
            if (!b) continue;
            sol.voltage[*b] = part.voltage[i];
            sol.mismatch[*b] = part.mismatch[i];
            sol.demand[*b] = part.demand[i];
        }
        for (std::size_t i = 0; i < part.branch_ids.size(); ++i) {
            const auto k = net.branch_index(part.branch_ids[i]);
            if (!k) continue;
            sol.current_from[*k] = part.current_from[i];
            sol.current_to[*k] = part.current_to[i];
        }
        for (const auto& [id, taps] : part.regulator_taps) sol.regulator_taps[id] = taps;
        sol.max_mismatch = std::max(sol.max_mismatch, part.max_mismatch);
    };
    merge(tx);
    sol.generators = tx.generators;
    sol.source_power = tx.source_power;
    for (std::size_t c = 0; c < circuits.size(); ++c) {
        merge(parts[c]);
        for (const auto& sp : parts[c].source_power) sol.source_power.push_back(sp);
    }
    sol.reindex();
    return sol;
}

}  // namespace

PowerFlowSolution solve_iterative_coupled(const Network& model, const PowerFlowOptions& options) {
    const auto start = Clock::now();
    Network net = model;
    net.reindex();
    const bool paired = std::any_of(net.sources.begin(), net.sources.end(),
                                    [](const netmodel::Source& s) { return !s.paired_bus.empty(); });
    netmodel::BoundarySplit split;
    if (paired) {
        split = netmodel::split_boundary_model(net);
    } else {
        split.transmission = net;
    }
    const auto& circuits = split.circuits;

    PowerFlowOptions inner = options;
    inner.tolerance = 1e-3 * std::min(options.tolerance, options.boundary_tolerance);

    std::vector<PhaseTriple> v_boundary(circuits.size());
    for (std::size_t c = 0; c < circuits.size(); ++c) v_boundary[c] = circuits[c].network.sources.front().voltage;

    std::vector<PowerFlowSolution> parts(circuits.size());
    PowerFlowSolution tx;
    const PowerFlowSolution* warm = nullptr;
    std::vector<OuterRound> trace;
    int inner_iterations = 0;
    for (int round = 1; round <= options.max_outer; ++round) {
        const auto round_start = Clock::now();
        parallel_for(circuits.size(), options.jobs, [&](std::size_t c) {
            try {
                parts[c] = solve_distribution_fbs(circuits[c].network, v_boundary[c], inner);
            } catch (const Error& e) {
                throw Error(e.code(), e.what(), circuits[c].source_id);
            }
        });
        BoundaryLoads loads;
        OuterRound r;
        r.round = round;
        for (std::size_t c = 0; c < circuits.size(); ++c) {
            PhaseTriple& s = loads[circuits[c].boundary_bus];
            const PhaseTriple& p = parts[c].source_power.front().second;
            for (int ph = 0; ph < 3; ++ph) s[ph] += p[ph];
            r.inner_iterations += parts[c].inner_iterations;
        }
        tx = solve_transmission_nr(split.transmission, loads, inner, warm);
        warm = &tx;
        r.inner_iterations += tx.inner_iterations;
        inner_iterations += r.inner_iterations;
        r.max_mismatch = tx.max_mismatch;
        for (std::size_t c = 0; c < circuits.size(); ++c) {
            const PhaseTriple vb = tx.voltage_at(circuits[c].boundary_bus);
            for (int ph : circuits[c].network.sources.front().phases.list()) {
                r.max_dv = std::max(r.max_dv, std::abs(vb[ph] - v_boundary[c][ph]));
                v_boundary[c][ph] = vb[ph];
            }
        }
        r.wall_ms = ms_since(round_start);
        trace.push_back(r);
        if (r.max_dv <= options.boundary_tolerance) {
            PowerFlowSolution sol = assemble(net, tx, circuits, parts);
            sol.rounds = std::move(trace);
            sol.inner_iterations = inner_iterations;
            sol.converged = true;
            sol.wall_seconds = ms_since(start) / 1000.0;
            return sol;
        }
    }
    throw Error(ErrorCode::NoConvergence,
                "boundary exchange did not converge in " + std::to_string(options.max_outer) + " rounds", net.name);
}

PowerFlowSolution solve(const Network& net, const PowerFlowOptions& options) {
    bool paired = false;
    for (const auto& s : net.sources) paired = paired || !s.paired_bus.empty();
    if (paired && options.mode == CouplingMode::Coupled) return solve_iterative_coupled(net, options);
    return solve_unified(net, options);
}

}  // namespace tdsim::powerflow
