#pragma once

#include <filesystem>
#include <string>

#include "tdsim/analysis/imbalance.hpp"
#include "tdsim/analysis/sag.hpp"
#include "tdsim/dynamics/scenario.hpp"
#include "tdsim/powerflow/solution.hpp"

namespace tdsim::analysis {

// Numbers are written with 12 significant digits.
std::string format_number(double x);

// Writes through a temporary file in the same directory and renames it into
// place. Error: Io.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// bus, phase, v_pu, angle_deg, kw, kvar (demand at the solved voltage);
// one row per bus phase present.
std::string solution_csv(const powerflow::PowerFlowSolution& sol);
// round, max_dv, max_mismatch, inner_iterations (wall time is left out so
// that repeated runs give identical files)
std::string trace_csv(const powerflow::PowerFlowSolution& sol);
// time, probe, value
std::string timeseries_csv(const dynamics::TimeSeries& ts);
// Sidecar record: step, samples, scenario hash, probes, applied events, notes.
std::string timeseries_metadata_json(const dynamics::TimeSeries& ts);
// bus, phase_imbalance_pct, seq_imbalance_pct, va_pu, vb_pu, vc_pu
std::string imbalance_csv(const ImbalanceReport& report);
// count, min_pct, max_pct, fraction_above_1pct
std::string imbalance_summary_csv(const ImbalanceReport& report);
// time, then one column per voltage-magnitude probe (plot-ready sag view)
std::string voltage_table_csv(const dynamics::TimeSeries& ts);
// duration_s, min_voltage_pu
std::string iti_envelope_csv();
// probe, bus, phase, start_s, duration_s, residual_pu, classification
std::string sag_events_csv(const std::vector<SagEvent>& events);

}  // namespace tdsim::analysis
