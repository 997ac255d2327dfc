#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdsim/dynamics/scenario.hpp"

namespace tdsim::analysis {

enum class ItiClass { WithinEnvelope, UndervoltageViolation };

const char* to_string(ItiClass c);

inline constexpr double kSagThresholdPu = 0.9;

// Undervoltage side of the ITI (CBEMA) curve: below 20 ms anything goes,
// then minimum 0.7 pu up to 0.5 s, 0.8 pu up to 10 s, 0.9 pu beyond.
double iti_minimum_voltage(double duration_s);
ItiClass iti_classify(double residual_pu, double duration_s);
// Envelope polyline (duration s, minimum pu) for plotting.
std::vector<std::pair<double, double>> iti_envelope();

struct SagEvent {
    std::string probe;
    std::string bus;
    int phase = 0;
    double start = 0.0;     // first sample below threshold, s
    double duration = 0.0;  // until the first sample back above it, s
    double residual = 0.0;  // minimum magnitude during the event, pu
    ItiClass classification = ItiClass::WithinEnvelope;
};

// Contiguous runs of a voltage-magnitude probe below `threshold`. A run
// still open at the end of the trace lasts one step past its last sample.
// Errors: UnknownProbe, DegenerateInput (not a voltage-magnitude probe or an
// empty trace).
std::vector<SagEvent> sag_trace(const dynamics::TimeSeries& ts, std::string_view probe,
                                double threshold = kSagThresholdPu);

}  // namespace tdsim::analysis
