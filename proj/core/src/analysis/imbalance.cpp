#include "tdsim/analysis/imbalance.hpp"

#include <algorithm>
#include <cmath>

#include "tdsim/error.hpp"
#include "tdsim/numerics/sequence.hpp"

namespace tdsim::analysis {

double voltage_imbalance_phase(const std::array<double, 3>& m) {
    for (double x : m) {
        if (!(x > 0.0)) throw Error(ErrorCode::DegenerateInput, "phase magnitude is zero");
    }
    const double mean = (m[0] + m[1] + m[2]) / 3.0;
    double dev = 0.0;
    for (double x : m) dev = std::max(dev, std::abs(x - mean));
    return 100.0 * dev / mean;
}

double voltage_imbalance_seq(const PhaseTriple& v) {
    const auto seq = numerics::fortescue_decompose(v);
    const double v1 = std::abs(seq.v1);
    // Roundoff leaves a residue of order 1e-16 of the phase magnitudes on a
    // pure negative or zero sequence set.
    const double scale = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
    if (!(v1 > 1e-12 * scale)) throw Error(ErrorCode::DegenerateInput, "positive-sequence voltage is zero");
    return 100.0 * std::abs(seq.v2) / v1;
}

Scope Scope::parse(std::string_view text) {
    Scope s;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        if (end > start) s.prefixes.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return s;
}

bool Scope::contains(std::string_view bus) const {
    if (prefixes.empty()) return true;
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return bus.starts_with(p); });
}

ImbalanceReport imbalance_report(const powerflow::PowerFlowSolution& sol, const Scope& scope) {
    ImbalanceReport r;
    for (std::size_t b = 0; b < sol.bus_ids.size(); ++b) {
        if (sol.bus_phases[b].size() != 3 || !scope.contains(sol.bus_ids[b])) continue;
        const PhaseTriple& v = sol.voltage[b];
        const std::array<double, 3> m{std::abs(v[0]), std::abs(v[1]), std::abs(v[2])};
        if (m[0] == 0.0 || m[1] == 0.0 || m[2] == 0.0) continue;
        r.records.push_back({sol.bus_ids[b], voltage_imbalance_phase(m), voltage_imbalance_seq(v), m});
    }
    std::stable_sort(r.records.begin(), r.records.end(),
                     [](const ImbalanceRecord& a, const ImbalanceRecord& b) { return a.phase_pct < b.phase_pct; });
    r.summary.count = r.records.size();
    if (!r.records.empty()) {
        r.summary.min = r.records.front().phase_pct;
        r.summary.max = r.records.back().phase_pct;
        const auto above = std::count_if(r.records.begin(), r.records.end(),
                                         [](const ImbalanceRecord& x) { return x.phase_pct > 1.0; });
        r.summary.fraction_above_1pct = static_cast<double>(above) / static_cast<double>(r.records.size());
    }
    return r;
}

}  // namespace tdsim::analysis
