#include "tdsim/dynamics/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "tdsim/error.hpp"

namespace tdsim::dynamics {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

struct KindName {
    EventKind kind;
    const char* name;
};
constexpr KindName kKinds[] = {
    {EventKind::ApplyShuntFault, "apply_shunt_fault"},
    {EventKind::ClearShuntFault, "clear_shunt_fault"},
    {EventKind::OpenBranch, "open_branch"},
    {EventKind::CloseBranch, "close_branch"},
};

struct QuantityName {
    ProbeQuantity quantity;
    const char* name;
};
constexpr QuantityName kQuantities[] = {
    {ProbeQuantity::VoltageMagnitude, "magnitude"},
    {ProbeQuantity::VoltageAngle, "angle"},
    {ProbeQuantity::Delta, "delta"},
    {ProbeQuantity::Speed, "speed"},
    {ProbeQuantity::EqPrime, "eq_p"},
    {ProbeQuantity::EdPrime, "ed_p"},
    {ProbeQuantity::PsiKd, "psi_kd"},
    {ProbeQuantity::PsiKq, "psi_kq"},
    {ProbeQuantity::Efd, "efd"},
    {ProbeQuantity::VSensed, "v_sensed"},
    {ProbeQuantity::ElectricalTorque, "te"},
    {ProbeQuantity::TerminalVoltage, "vt"},
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::SyntaxError, where + ": " + what, where);
}

double number(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(where, std::string("missing '") + key + "'");
    if (!j.at(key).is_number()) fail(where, std::string("'") + key + "' must be a number");
    const double x = j.at(key).get<double>();
    if (!std::isfinite(x)) fail(where, std::string("'") + key + "' must be finite");
    return x;
}

std::string text(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string()) fail(where, std::string("missing string '") + key + "'");
    return j.at(key).get<std::string>();
}

netmodel::PhaseSet phases(const Json& j, const std::string& where) {
    try {
        return netmodel::PhaseSet::parse(text(j, "phases", where));
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
}

Event parse_event(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "event must be an object");
    Event e;
    e.time = number(j, "time", where);
    if (e.time < 0.0) fail(where, "time must be >= 0");
    const std::string kind = text(j, "kind", where);
    auto it = std::find_if(std::begin(kKinds), std::end(kKinds), [&](const KindName& k) { return kind == k.name; });
    if (it == std::end(kKinds)) fail(where, "unknown kind '" + kind + "'");
    e.kind = it->kind;
    e.target = text(j, "target", where);
    if (e.kind == EventKind::ApplyShuntFault) {
        e.phases = phases(j, where);
        if (e.phases.empty()) fail(where, "fault needs at least one phase");
        if (j.contains("resistance_ohm")) {
            const double r = number(j, "resistance_ohm", where);
            if (r < 0.0) fail(where, "resistance_ohm must be >= 0");
            e.resistance_ohm = std::max(r, kBoltedFaultOhm);
        }
        if (j.contains("to_ground")) {
            if (!j.at("to_ground").is_boolean()) fail(where, "'to_ground' must be a boolean");
            e.to_ground = j.at("to_ground").get<bool>();
        }
        if (!e.to_ground && e.phases.size() < 2) fail(where, "ungrounded fault needs two or more phases");
    }
    return e;
}

Probe parse_probe(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "probe must be an object");
    Probe p;
    p.id = text(j, "id", where);
    const bool machine = j.contains("machine");
    if (machine == j.contains("bus")) fail(where, "probe needs exactly one of 'bus' or 'machine'");
    p.quantity = machine ? ProbeQuantity::Delta : ProbeQuantity::VoltageMagnitude;
    if (j.contains("quantity")) {
        const std::string q = text(j, "quantity", where);
        auto it = std::find_if(std::begin(kQuantities), std::end(kQuantities),
                               [&](const QuantityName& k) { return q == k.name; });
        if (it == std::end(kQuantities)) fail(where, "unknown quantity '" + q + "'");
        p.quantity = it->quantity;
    }
    if (p.machine() != machine) fail(where, "quantity does not match the probe target");
    if (machine) {
        p.target = text(j, "machine", where);
    } else {
        p.target = text(j, "bus", where);
        const std::string ph = text(j, "phase", where);
        if (ph.size() != 1 || std::string("ABCabc").find(ph[0]) == std::string::npos) {
            fail(where, "phase must be one of A, B, C");
        }
        p.phase = std::toupper(static_cast<unsigned char>(ph[0])) - 'A';
    }
    return p;
}

}  // namespace

const char* to_string(EventKind kind) {
    for (const auto& k : kKinds) {
        if (k.kind == kind) return k.name;
    }
    return "?";
}

const char* to_string(ProbeQuantity quantity) {
    for (const auto& q : kQuantities) {
        if (q.quantity == quantity) return q.name;
    }
    return "?";
}

DynamicScenario parse_scenario(std::string_view json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::SyntaxError, std::string("scenario: ") + e.what(), "scenario");
    }
    if (!j.is_object()) fail("scenario", "top level must be an object");
    DynamicScenario s;
    if (j.contains("dt")) s.dt = number(j, "dt", "scenario");
    s.duration = number(j, "duration", "scenario");
    if (s.dt <= 0.0) fail("scenario", "dt must be > 0");
    if (s.duration <= 0.0) fail("scenario", "duration must be > 0");
    if (j.contains("events")) {
        if (!j.at("events").is_array()) fail("scenario", "'events' must be an array");
        for (std::size_t i = 0; i < j.at("events").size(); ++i) {
            const std::string where = "events[" + std::to_string(i) + "]";
            s.events.push_back(parse_event(j.at("events")[i], where));
            if (s.events.back().time > s.duration) fail(where, "time exceeds duration");
        }
    }
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    if (j.contains("probes")) {
        if (!j.at("probes").is_array()) fail("scenario", "'probes' must be an array");
        for (std::size_t i = 0; i < j.at("probes").size(); ++i) {
            const std::string where = "probes[" + std::to_string(i) + "]";
            s.probes.push_back(parse_probe(j.at("probes")[i], where));
            for (std::size_t k = 0; k + 1 < s.probes.size(); ++k) {
                if (s.probes[k].id == s.probes.back().id) fail(where, "duplicate probe id '" + s.probes[k].id + "'");
            }
        }
    }
    return s;
}

std::string serialize_scenario(const DynamicScenario& s) {
    OJson j;
    j["dt"] = s.dt;
    j["duration"] = s.duration;
    j["events"] = OJson::array();
    for (const Event& e : s.events) {
        OJson x{{"time", e.time}, {"kind", to_string(e.kind)}, {"target", e.target}};
        if (e.kind == EventKind::ApplyShuntFault) {
            x["phases"] = e.phases.str();
            x["resistance_ohm"] = e.resistance_ohm;
            x["to_ground"] = e.to_ground;
        }
        j["events"].push_back(x);
    }
    j["probes"] = OJson::array();
    for (const Probe& p : s.probes) {
        OJson x{{"id", p.id}};
        if (p.machine()) {
            x["machine"] = p.target;
        } else {
            x["bus"] = p.target;
            x["phase"] = std::string(1, static_cast<char>('A' + p.phase));
        }
        x["quantity"] = to_string(p.quantity);
        j["probes"].push_back(x);
    }
    return j.dump(1);
}

std::string scenario_hash(const DynamicScenario& scenario) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : serialize_scenario(scenario)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const std::vector<double>* TimeSeries::find(std::string_view probe_id) const {
    for (std::size_t i = 0; i < probe_ids.size(); ++i) {
        if (probe_ids[i] == probe_id) return &values[i];
    }
    return nullptr;
}

}  // namespace tdsim::dynamics
