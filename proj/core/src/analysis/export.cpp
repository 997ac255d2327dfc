#include "tdsim/analysis/export.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tdsim/error.hpp"

namespace tdsim::analysis {

namespace {

char phase_letter(int p) { return static_cast<char>('A' + p); }

}  // namespace

std::string format_number(double x) {
    if (x == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing", path.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "write to '" + tmp.string() + "' failed", path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::Io, "cannot move output into '" + path.string() + "'", path.string());
    }
}

std::string solution_csv(const powerflow::PowerFlowSolution& sol) {
    std::ostringstream s;
    s << "bus,phase,v_pu,angle_deg,kw,kvar\n";
    for (std::size_t b = 0; b < sol.bus_ids.size(); ++b) {
        for (int p : sol.bus_phases[b].list()) {
            const auto v = sol.voltage[b][p];
            const auto d = b < sol.demand.size() ? sol.demand[b][p] : numerics::Phasor{};
            s << sol.bus_ids[b] << ',' << phase_letter(p) << ',' << format_number(std::abs(v)) << ','
              << format_number(v == numerics::Phasor{} ? 0.0 : numerics::angle_deg(v)) << ','
              << format_number(d.real()) << ',' << format_number(d.imag()) << '\n';
        }
    }
    return s.str();
}

std::string trace_csv(const powerflow::PowerFlowSolution& sol) {
    std::ostringstream s;
    s << "round,max_dv,max_mismatch,inner_iterations\n";
    for (const auto& r : sol.rounds) {
        s << r.round << ',' << format_number(r.max_dv) << ',' << format_number(r.max_mismatch) << ','
          << r.inner_iterations << '\n';
    }
    return s.str();
}

std::string timeseries_csv(const dynamics::TimeSeries& ts) {
    std::ostringstream s;
    s << "time,probe,value\n";
    for (std::size_t k = 0; k < ts.time.size(); ++k) {
        for (std::size_t i = 0; i < ts.probe_ids.size(); ++i) {
            s << format_number(ts.time[k]) << ',' << ts.probe_ids[i] << ',' << format_number(ts.values[i][k]) << '\n';
        }
    }
    return s.str();
}

std::string voltage_table_csv(const dynamics::TimeSeries& ts) {
    std::vector<std::size_t> cols;
    std::ostringstream s;
    s << "time";
    for (std::size_t i = 0; i < ts.probes.size(); ++i) {
        if (ts.probes[i].quantity != dynamics::ProbeQuantity::VoltageMagnitude) continue;
        cols.push_back(i);
        s << ',' << ts.probe_ids[i];
    }
    s << '\n';
    for (std::size_t k = 0; k < ts.time.size(); ++k) {
        s << format_number(ts.time[k]);
        for (std::size_t i : cols) s << ',' << format_number(ts.values[i][k]);
        s << '\n';
    }
    return s.str();
}

std::string timeseries_metadata_json(const dynamics::TimeSeries& ts) {
    nlohmann::ordered_json j;
    j["scenario_hash"] = ts.scenario_hash;
    j["dt"] = ts.dt;
    j["samples"] = ts.time.size();
    j["probes"] = nlohmann::ordered_json::array();
    for (const auto& p : ts.probes) {
        nlohmann::ordered_json x{{"id", p.id}, {"target", p.target}, {"quantity", dynamics::to_string(p.quantity)}};
        if (!p.machine()) x["phase"] = std::string(1, phase_letter(p.phase));
        j["probes"].push_back(x);
    }
    j["events"] = nlohmann::ordered_json::array();
    for (const auto& e : ts.events) {
        j["events"].push_back({{"kind", dynamics::to_string(e.event.kind)},
                               {"target", e.event.target},
                               {"time", e.event.time},
                               {"snapped_time", e.snapped_time},
                               {"step", e.step}});
    }
    j["notes"] = ts.notes;
    return j.dump(1) + "\n";
}

std::string imbalance_csv(const ImbalanceReport& r) {
    std::ostringstream s;
    s << "bus,phase_imbalance_pct,seq_imbalance_pct,va_pu,vb_pu,vc_pu\n";
    for (const auto& x : r.records) {
        s << x.bus << ',' << format_number(x.phase_pct) << ',' << format_number(x.seq_pct) << ','
          << format_number(x.magnitudes[0]) << ',' << format_number(x.magnitudes[1]) << ','
          << format_number(x.magnitudes[2]) << '\n';
    }
    return s.str();
}

std::string imbalance_summary_csv(const ImbalanceReport& r) {
    std::ostringstream s;
    s << "count,min_pct,max_pct,fraction_above_1pct\n"
      << r.summary.count << ',' << format_number(r.summary.min) << ',' << format_number(r.summary.max) << ','
      << format_number(r.summary.fraction_above_1pct) << '\n';
    return s.str();
}

std::string iti_envelope_csv() {
    std::ostringstream s;
    s << "duration_s,min_voltage_pu\n";
    for (const auto& [d, v] : iti_envelope()) s << format_number(d) << ',' << format_number(v) << '\n';
    return s.str();
}

std::string sag_events_csv(const std::vector<SagEvent>& events) {
    std::ostringstream s;
    s << "probe,bus,phase,start_s,duration_s,residual_pu,classification\n";
    for (const auto& e : events) {
        s << e.probe << ',' << e.bus << ',' << phase_letter(e.phase) << ',' << format_number(e.start) << ','
          << format_number(e.duration) << ',' << format_number(e.residual) << ',' << to_string(e.classification)
          << '\n';
    }
    return s.str();
}

}  // namespace tdsim::analysis
