#include "tdsim/analysis/sag.hpp"

#include <algorithm>

#include "tdsim/error.hpp"

namespace tdsim::analysis {

const char* to_string(ItiClass c) {
    return c == ItiClass::WithinEnvelope ? "within_envelope" : "undervoltage_violation";
}

double iti_minimum_voltage(double d) {
    if (d < 0.02) return 0.0;
    if (d <= 0.5) return 0.7;
    if (d <= 10.0) return 0.8;
    return 0.9;
}

ItiClass iti_classify(double residual, double duration) {
    return residual < iti_minimum_voltage(duration) ? ItiClass::UndervoltageViolation : ItiClass::WithinEnvelope;
}

std::vector<std::pair<double, double>> iti_envelope() {
    return {{0.0, 0.0}, {0.02, 0.0}, {0.02, 0.7}, {0.5, 0.7}, {0.5, 0.8}, {10.0, 0.8}, {10.0, 0.9}, {100.0, 0.9}};
}

std::vector<SagEvent> sag_trace(const dynamics::TimeSeries& ts, std::string_view probe, double threshold) {
    std::size_t index = ts.probe_ids.size();
    for (std::size_t i = 0; i < ts.probe_ids.size(); ++i) {
        if (ts.probe_ids[i] == probe) index = i;
    }
    if (index == ts.probe_ids.size()) {
        throw Error(ErrorCode::UnknownProbe, "no probe '" + std::string(probe) + "' in the time series",
                    std::string(probe));
    }
    if (index < ts.probes.size() && ts.probes[index].quantity != dynamics::ProbeQuantity::VoltageMagnitude) {
        throw Error(ErrorCode::DegenerateInput, "probe '" + std::string(probe) + "' is not a voltage magnitude",
                    std::string(probe));
    }
    const std::vector<double>& v = ts.values[index];
    if (v.empty() || ts.time.size() != v.size()) {
        throw Error(ErrorCode::DegenerateInput, "empty trace for probe '" + std::string(probe) + "'", std::string(probe));
    }
    std::vector<SagEvent> out;
    std::size_t k = 0;
    while (k < v.size()) {
        if (v[k] >= threshold) {
            ++k;
            continue;
        }
        const std::size_t first = k;
        double residual = v[k];
        while (k < v.size() && v[k] < threshold) residual = std::min(residual, v[k++]);
        const double end = k < v.size() ? ts.time[k] : ts.time.back() + ts.dt;
        SagEvent e;
        e.probe = std::string(probe);
        if (index < ts.probes.size()) {
            e.bus = ts.probes[index].target;
            e.phase = ts.probes[index].phase;
        }
        e.start = ts.time[first];
        e.duration = end - e.start;
        e.residual = residual;
        e.classification = iti_classify(residual, e.duration);
        if (e.duration >= ts.dt * (1.0 - 1e-9)) out.push_back(std::move(e));
    }
    return out;
}

}  // namespace tdsim::analysis
