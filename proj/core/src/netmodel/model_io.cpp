#include "tdsim/netmodel/model_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "tdsim/error.hpp"

namespace tdsim::netmodel {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

// Line on which each record of the top-level arrays starts, keyed by
// (array name, index). Used to point errors at the offending record.
class RecordLines {
public:
    explicit RecordLines(std::string_view text) {
        int line = 1;
        int depth = 0;
        bool in_string = false;
        bool escape = false;
        std::string last_key;
        std::string current;
        std::string array;
        std::size_t index = 0;
        for (char c : text) {
            if (c == '\n') ++line;
            if (in_string) {
                if (escape) {
                    escape = false;
                } else if (c == '\\') {
                    escape = true;
                } else if (c == '"') {
                    in_string = false;
                    if (depth == 1) last_key = current;
                } else if (depth == 1) {
                    current.push_back(c);
                }
                continue;
            }
            switch (c) {
            case '"':
                in_string = true;
                current.clear();
                break;
            case '[':
            case '{':
                if (depth == 1 && c == '[') {
                    array = last_key;
                    index = 0;
                } else if (depth == 2 && c == '{') {
                    lines_[{array, index++}] = line;
                }
                ++depth;
                break;
            case ']':
            case '}':
                --depth;
                break;
            default:
                break;
            }
        }
    }

    int at(const std::string& array, std::size_t index) const {
        auto it = lines_.find({array, index});
        return it == lines_.end() ? 0 : it->second;
    }

private:
    std::map<std::pair<std::string, std::size_t>, int> lines_;
};

class Reader {
public:
    Reader(const RecordLines& lines, std::string array, std::size_t index)
        : lines_(lines), array_(std::move(array)), index_(index) {}

    [[noreturn]] void fail(const std::string& what) const {
        const int line = lines_.at(array_, index_);
        throw Error(ErrorCode::SyntaxError,
                    "line " + std::to_string(line) + ": " + array_ + "[" +
                        std::to_string(index_) + "]: " + what,
                    std::to_string(line));
    }

    const Json& field(const Json& obj, const char* key) const {
        if (!obj.is_object()) fail("record is not an object");
        auto it = obj.find(key);
        if (it == obj.end()) fail(std::string("missing field '") + key + "'");
        return *it;
    }

    std::string str(const Json& obj, const char* key) const {
        const Json& v = field(obj, key);
        if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
        return v.get<std::string>();
    }

    std::string str_or(const Json& obj, const char* key, std::string fallback) const {
        return obj.contains(key) ? str(obj, key) : fallback;
    }

    double num(const Json& v, const char* key) const {
        if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(std::string("field '") + key + "' must be finite");
        return d;
    }

    double num(const Json& obj, const char* key, bool) const { return num(field(obj, key), key); }

    double num_or(const Json& obj, const char* key, double fallback) const {
        return obj.contains(key) ? num(obj.at(key), key) : fallback;
    }

    int integer(const Json& v, const char* key) const {
        if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
        return v.get<int>();
    }

    bool boolean_or(const Json& obj, const char* key, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        const Json& v = obj.at(key);
        if (!v.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
        return v.get<bool>();
    }

    PhaseSet phases(const Json& obj) const {
        try {
            PhaseSet p = PhaseSet::parse(str(obj, "phases"));
            if (p.empty()) fail("empty phase set");
            return p;
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }

    Phasor complex(const Json& v, const char* key) const {
        if (!v.is_object() || !v.contains("re") || !v.contains("im")) {
            fail(std::string("field '") + key + "' must be a {re, im} object");
        }
        return {num(v.at("re"), key), num(v.at("im"), key)};
    }

    std::vector<double> numbers(const Json& obj, const char* key, std::size_t n) const {
        const Json& v = field(obj, key);
        if (!v.is_array() || v.size() != n) {
            fail(std::string("field '") + key + "' must be an array of " + std::to_string(n));
        }
        std::vector<double> out;
        for (const Json& x : v) out.push_back(num(x, key));
        return out;
    }

    PhaseMatrix matrix(const Json& obj, const char* key, std::size_t k) const {
        const Json& v = field(obj, key);
        if (!v.is_array() || v.size() != k * k) {
            fail(std::string("field '") + key + "' must hold " + std::to_string(k * k) +
                 " complex entries (row-major)");
        }
        PhaseMatrix m(k);
        for (std::size_t i = 0; i < k * k; ++i) m.data()[i] = complex(v[i], key);
        return m;
    }

private:
    const RecordLines& lines_;
    std::string array_;
    std::size_t index_;
};

const Json& array_or_empty(const Json& root, const char* key) {
    static const Json empty = Json::array();
    auto it = root.find(key);
    if (it == root.end()) return empty;
    if (!it->is_array()) {
        throw Error(ErrorCode::SyntaxError, std::string("top-level '") + key + "' must be an array");
    }
    return *it;
}

BusKind bus_kind(const Reader& r, const std::string& s) {
    if (s == "transmission") return BusKind::Transmission;
    if (s == "distribution") return BusKind::Distribution;
    if (s == "boundary") return BusKind::Boundary;
    r.fail("unknown bus kind '" + s + "'");
}

BranchKind branch_kind(const Reader& r, const std::string& s) {
    if (s == "line") return BranchKind::Line;
    if (s == "cable") return BranchKind::Cable;
    if (s == "transformer") return BranchKind::Transformer;
    if (s == "regulator") return BranchKind::Regulator;
    if (s == "switch") return BranchKind::Switch;
    r.fail("unknown branch kind '" + s + "'");
}

Winding winding(const Reader& r, const std::string& s) {
    if (s == "wye-g") return Winding::WyeGrounded;
    if (s == "wye") return Winding::Wye;
    if (s == "delta") return Winding::Delta;
    r.fail("unknown winding connection '" + s + "'");
}

template <class T>
void check_unique(const std::vector<T>& items, const char* what) {
    std::set<std::string> seen;
    for (const T& item : items) {
        if (!seen.insert(item.id).second) {
            throw Error(ErrorCode::DuplicateId, std::string("duplicate ") + what + " id '" + item.id + "'",
                        item.id);
        }
    }
}

void require_bus(const Network& net, const std::string& bus, const std::string& owner) {
    if (!net.bus_index(bus)) {
        throw Error(ErrorCode::ReferenceError, "'" + owner + "' references unknown bus '" + bus + "'",
                    bus);
    }
}

void parse_bus(const Reader& r, const Json& j, Network& net) {
    Bus b;
    b.id = r.str(j, "id");
    b.phases = r.phases(j);
    b.nominal_kv = r.num(j, "nominal_kv", true);
    b.kind = bus_kind(r, r.str_or(j, "kind", "distribution"));
    net.buses.push_back(std::move(b));
}

void parse_branch(const Reader& r, const Json& j, Network& net) {
    Branch b;
    b.id = r.str(j, "id");
    b.kind = branch_kind(r, r.str(j, "kind"));
    b.from = r.str(j, "from");
    b.to = r.str(j, "to");
    b.phases = r.phases(j);
    const std::size_t k = b.phases.size();
    switch (b.kind) {
    case BranchKind::Line:
    case BranchKind::Cable:
        if (j.contains("sequence")) {
            const Json& s = j.at("sequence");
            if (k != 3) r.fail("sequence line data requires three phases");
            const double length = r.num_or(s, "length", 1.0);
            const double alpha = r.num_or(s, "asymmetry", 0.0);
            const Phasor z1 = r.complex(r.field(s, "z1"), "z1");
            const Phasor z0 = s.contains("z0") ? r.complex(s.at("z0"), "z0") : 3.0 * z1;
            const Phasor y1 = s.contains("y1") ? r.complex(s.at("y1"), "y1") : Phasor{};
            const Phasor y0 = s.contains("y0") ? r.complex(s.at("y0"), "y0") : y1;
            b.z_series = three_phase_from_sequence(z1, z0, length, alpha);
            b.y_shunt = three_phase_from_sequence(y1, y0, length, 0.0);
        } else {
            b.z_series = r.matrix(j, "z_series", k);
            b.y_shunt = j.contains("y_shunt") ? r.matrix(j, "y_shunt", k) : PhaseMatrix(k);
        }
        break;
    case BranchKind::Transformer: {
        const Json& t = r.field(j, "transformer");
        TransformerData d;
        d.conn_from = winding(r, r.str(t, "conn_from"));
        d.conn_to = winding(r, r.str(t, "conn_to"));
        d.kv_from = r.num(t, "kv_from", true);
        d.kv_to = r.num(t, "kv_to", true);
        d.kva = r.num(t, "kva", true);
        d.r_pct = r.num(t, "r_pct", true);
        d.x_pct = r.num(t, "x_pct", true);
        d.taps = t.contains("taps") ? r.numbers(t, "taps", k) : std::vector<double>(k, 1.0);
        b.transformer = d;
        break;
    }
    case BranchKind::Regulator: {
        const Json& g = r.field(j, "regulator");
        RegulatorData d;
        const Json& taps = r.field(g, "taps");
        if (!taps.is_array() || taps.size() != k) r.fail("regulator taps must list every phase");
        for (const Json& t : taps) d.taps.push_back(r.integer(t, "taps"));
        d.band_center_pu = r.num_or(g, "band_center_pu", d.band_center_pu);
        d.bandwidth_pu = r.num_or(g, "bandwidth_pu", d.bandwidth_pu);
        d.step_pu = r.num_or(g, "step_pu", d.step_pu);
        d.tap_min = g.contains("tap_min") ? r.integer(g.at("tap_min"), "tap_min") : d.tap_min;
        d.tap_max = g.contains("tap_max") ? r.integer(g.at("tap_max"), "tap_max") : d.tap_max;
        d.pt_ratio = r.num_or(g, "pt_ratio", d.pt_ratio);
        d.ct_primary_a = r.num_or(g, "ct_primary_a", d.ct_primary_a);
        d.r_comp_v = g.contains("r_comp_v") ? r.numbers(g, "r_comp_v", k) : std::vector<double>(k, 0.0);
        d.x_comp_v = g.contains("x_comp_v") ? r.numbers(g, "x_comp_v", k) : std::vector<double>(k, 0.0);
        d.ganged = r.boolean_or(g, "ganged", false);
        b.regulator = d;
        break;
    }
    case BranchKind::Switch:
        b.closed = j.contains("switch") ? r.boolean_or(j.at("switch"), "closed", true) : true;
        break;
    }
    net.branches.push_back(std::move(b));
}

double bus_kv(const Network& net, const std::string& bus) {
    auto i = net.bus_index(bus);
    return i ? net.buses[*i].nominal_kv : 0.0;
}

void parse_load(const Reader& r, const Json& j, Network& net) {
    Load l;
    l.id = r.str(j, "id");
    l.bus = r.str(j, "bus");
    require_bus(net, l.bus, l.id);
    l.phases = r.phases(j);
    const std::string conn = r.str_or(j, "connection", "wye");
    if (conn == "wye") {
        l.connection = LoadConnection::Wye;
    } else if (conn == "delta") {
        l.connection = LoadConnection::Delta;
        if (l.phases.size() < 2) r.fail("delta load needs at least two phases");
    } else {
        r.fail("unknown load connection '" + conn + "'");
    }
    const std::size_t n = load_element_count(l);
    l.kw = r.numbers(j, "kw", n);
    l.kvar = j.contains("kvar") ? r.numbers(j, "kvar", n) : std::vector<double>(n, 0.0);
    if (j.contains("model")) {
        const Json& m = j.at("model");
        l.model = {r.num_or(m, "p", 0.0), r.num_or(m, "i", 0.0), r.num_or(m, "z", 0.0)};
    }
    const double kv = bus_kv(net, l.bus);
    l.kv = r.num_or(j, "kv", l.connection == LoadConnection::Wye ? kv / std::sqrt(3.0) : kv);
    net.loads.push_back(std::move(l));
}

void parse_shunt(const Reader& r, const Json& j, Network& net) {
    Shunt s;
    s.id = r.str(j, "id");
    s.bus = r.str(j, "bus");
    require_bus(net, s.bus, s.id);
    s.phases = r.phases(j);
    s.kvar = r.numbers(j, "kvar", s.phases.size());
    s.kv = r.num_or(j, "kv", bus_kv(net, s.bus) / std::sqrt(3.0));
    net.shunts.push_back(std::move(s));
}

void parse_dg(const Reader& r, const Json& j, Network& net) {
    DistributedGenerator g;
    g.id = r.str(j, "id");
    g.bus = r.str(j, "bus");
    require_bus(net, g.bus, g.id);
    g.phases = r.phases(j);
    g.p_kw = r.num(j, "p_kw", true);
    g.q_kvar = r.num_or(j, "q_kvar", 0.0);
    g.unity_pf = r.boolean_or(j, "unity_pf", !j.contains("q_kvar"));
    net.dgs.push_back(std::move(g));
}

void parse_generator(const Reader& r, const Json& j, Network& net) {
    Generator g;
    g.id = r.str(j, "id");
    g.bus = r.str(j, "bus");
    require_bus(net, g.bus, g.id);
    const std::string role = r.str(j, "role");
    if (role == "slack") {
        g.role = GeneratorRole::Slack;
    } else if (role == "pv") {
        g.role = GeneratorRole::PV;
    } else {
        r.fail("unknown generator role '" + role + "'");
    }
    g.p_mw = r.num_or(j, "p_mw", 0.0);
    g.v_pu = r.num_or(j, "v_pu", 1.0);
    g.angle_deg = r.num_or(j, "angle_deg", 0.0);
    g.x_internal_pu = r.num_or(j, "x_internal_pu", 0.0);
    g.machine = r.str_or(j, "machine", "");
    net.generators.push_back(std::move(g));
}

void parse_machine(const Reader& r, const Json& j, Network& net) {
    SynchronousMachine m;
    m.id = r.str(j, "id");
    m.bus = r.str(j, "bus");
    require_bus(net, m.bus, m.id);
    m.mva_base = r.num(j, "mva_base", true);
    if (j.contains("genrou")) {
        const Json& g = j.at("genrou");
        GenrouParameters& p = m.genrou;
        p.h = r.num_or(g, "h", p.h);
        p.d = r.num_or(g, "d", p.d);
        p.ra = r.num_or(g, "ra", p.ra);
        p.tdo_p = r.num_or(g, "tdo_p", p.tdo_p);
        p.tdo_pp = r.num_or(g, "tdo_pp", p.tdo_pp);
        p.tqo_p = r.num_or(g, "tqo_p", p.tqo_p);
        p.tqo_pp = r.num_or(g, "tqo_pp", p.tqo_pp);
        p.xd = r.num_or(g, "xd", p.xd);
        p.xq = r.num_or(g, "xq", p.xq);
        p.xd_p = r.num_or(g, "xd_p", p.xd_p);
        p.xq_p = r.num_or(g, "xq_p", p.xq_p);
        p.x_pp = r.num_or(g, "x_pp", p.x_pp);
        p.xl = r.num_or(g, "xl", p.xl);
        p.s10 = r.num_or(g, "s10", p.s10);
        p.s12 = r.num_or(g, "s12", p.s12);
    }
    if (j.contains("st1a")) {
        const Json& e = j.at("st1a");
        St1aParameters& p = m.st1a;
        p.tr = r.num_or(e, "tr", p.tr);
        p.ka = r.num_or(e, "ka", p.ka);
        p.tb = r.num_or(e, "tb", p.tb);
        p.tc = r.num_or(e, "tc", p.tc);
        p.vrmax = r.num_or(e, "vrmax", p.vrmax);
        p.vrmin = r.num_or(e, "vrmin", p.vrmin);
    }
    net.machines.push_back(std::move(m));
}

void parse_source(const Reader& r, const Json& j, Network& net) {
    Source s;
    s.id = r.str(j, "id");
    s.bus = r.str(j, "bus");
    require_bus(net, s.bus, s.id);
    s.phases = r.phases(j);
    const std::vector<int> ph = s.phases.list();
    if (j.contains("voltage")) {
        const Json& v = j.at("voltage");
        if (!v.is_array() || v.size() != ph.size()) r.fail("source voltage must list every phase");
        for (std::size_t i = 0; i < ph.size(); ++i) s.voltage[ph[i]] = r.complex(v[i], "voltage");
    } else {
        const PhaseTriple bal = numerics::balanced(1.0);
        for (int p : ph) s.voltage[p] = bal[p];
    }
    s.paired_bus = r.str_or(j, "paired_bus", "");
    if (!s.paired_bus.empty()) require_bus(net, s.paired_bus, s.id);
    net.sources.push_back(std::move(s));
}

void parse_substation(const Reader& r, const Json& j, Network& net) {
    Substation s;
    s.id = r.str(j, "id");
    s.bus = r.str(j, "bus");
    require_bus(net, s.bus, s.id);
    s.variant = r.str_or(j, "variant", "");
    s.feeders = j.contains("feeders") ? r.integer(j.at("feeders"), "feeders") : 0;
    s.load_scale = r.num_or(j, "load_scale", 1.0);
    s.joined = r.boolean_or(j, "joined", false);
    net.substations.push_back(std::move(s));
}

template <class Fn>
void each_record(const Json& root, const RecordLines& lines, const char* key, Network& net, Fn fn) {
    const Json& arr = array_or_empty(root, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(lines, key, i);
        fn(r, arr[i], net);
    }
}

OJson complex_json(Phasor z) { return OJson{{"re", z.real()}, {"im", z.imag()}}; }

OJson matrix_json(const PhaseMatrix& m) {
    OJson a = OJson::array();
    for (const Phasor& z : m.data()) a.push_back(complex_json(z));
    return a;
}

}  // namespace

Network parse_network(std::string_view text) {
    Json root;
    try {
        root = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        int line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') ++line;
        }
        throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ": " + e.what(),
                    std::to_string(line));
    }
    if (!root.is_object()) throw Error(ErrorCode::SyntaxError, "line 1: model must be a JSON object", "1");
    const RecordLines lines(text);
    Network net;
    auto scalar = [&](const char* key) {
        auto it = root.find(key);
        if (it == root.end() || !it->is_number()) {
            throw Error(ErrorCode::SyntaxError, std::string("missing numeric top-level '") + key + "'");
        }
        return it->get<double>();
    };
    net.name = root.value("name", "");
    net.notes = root.value("notes", "");
    net.frequency_hz = scalar("frequency_hz");
    net.mva_base = scalar("mva_base");

    each_record(root, lines, "buses", net, parse_bus);
    check_unique(net.buses, "bus");
    net.reindex();
    each_record(root, lines, "branches", net, parse_branch);
    check_unique(net.branches, "branch");
    for (const Branch& b : net.branches) {
        require_bus(net, b.from, b.id);
        require_bus(net, b.to, b.id);
    }
    each_record(root, lines, "loads", net, parse_load);
    check_unique(net.loads, "load");
    each_record(root, lines, "shunts", net, parse_shunt);
    check_unique(net.shunts, "shunt");
    each_record(root, lines, "dgs", net, parse_dg);
    check_unique(net.dgs, "dg");
    each_record(root, lines, "machines", net, parse_machine);
    check_unique(net.machines, "machine");
    net.reindex();
    each_record(root, lines, "generators", net, parse_generator);
    check_unique(net.generators, "generator");
    for (const Generator& g : net.generators) {
        if (!g.machine.empty() && !net.machine_index(g.machine)) {
            throw Error(ErrorCode::ReferenceError,
                        "'" + g.id + "' references unknown machine '" + g.machine + "'", g.machine);
        }
    }
    each_record(root, lines, "sources", net, parse_source);
    check_unique(net.sources, "source");
    each_record(root, lines, "substations", net, parse_substation);
    check_unique(net.substations, "substation");
    net.reindex();
    return net;
}

std::string serialize_network(const Network& net) {
    OJson root;
    root["name"] = net.name;
    root["notes"] = net.notes;
    root["frequency_hz"] = net.frequency_hz;
    root["mva_base"] = net.mva_base;

    OJson buses = OJson::array();
    for (const Bus& b : net.buses) {
        buses.push_back({{"id", b.id}, {"phases", b.phases.str()}, {"nominal_kv", b.nominal_kv},
                         {"kind", to_string(b.kind)}});
    }
    root["buses"] = std::move(buses);

    OJson branches = OJson::array();
    for (const Branch& b : net.branches) {
        OJson j = {{"id", b.id}, {"kind", to_string(b.kind)}, {"from", b.from}, {"to", b.to},
                   {"phases", b.phases.str()}};
        switch (b.kind) {
        case BranchKind::Line:
        case BranchKind::Cable:
            j["z_series"] = matrix_json(b.z_series);
            j["y_shunt"] = matrix_json(b.y_shunt);
            break;
        case BranchKind::Transformer: {
            const TransformerData& t = *b.transformer;
            j["transformer"] = {{"conn_from", to_string(t.conn_from)}, {"conn_to", to_string(t.conn_to)},
                                {"kv_from", t.kv_from}, {"kv_to", t.kv_to}, {"kva", t.kva},
                                {"r_pct", t.r_pct}, {"x_pct", t.x_pct}, {"taps", t.taps}};
            break;
        }
        case BranchKind::Regulator: {
            const RegulatorData& g = *b.regulator;
            j["regulator"] = {{"taps", g.taps}, {"band_center_pu", g.band_center_pu},
                              {"bandwidth_pu", g.bandwidth_pu}, {"step_pu", g.step_pu},
                              {"tap_min", g.tap_min}, {"tap_max", g.tap_max},
                              {"pt_ratio", g.pt_ratio}, {"ct_primary_a", g.ct_primary_a},
                              {"r_comp_v", g.r_comp_v}, {"x_comp_v", g.x_comp_v},
                              {"ganged", g.ganged}};
            break;
        }
        case BranchKind::Switch:
            j["switch"] = {{"closed", b.closed}};
            break;
        }
        branches.push_back(std::move(j));
    }
    root["branches"] = std::move(branches);

    OJson loads = OJson::array();
    for (const Load& l : net.loads) {
        loads.push_back({{"id", l.id}, {"bus", l.bus}, {"phases", l.phases.str()},
                         {"connection", l.connection == LoadConnection::Wye ? "wye" : "delta"},
                         {"kw", l.kw}, {"kvar", l.kvar},
                         {"model", {{"p", l.model.p}, {"i", l.model.i}, {"z", l.model.z}}},
                         {"kv", l.kv}});
    }
    root["loads"] = std::move(loads);

    OJson shunts = OJson::array();
    for (const Shunt& s : net.shunts) {
        shunts.push_back({{"id", s.id}, {"bus", s.bus}, {"phases", s.phases.str()}, {"kvar", s.kvar},
                          {"kv", s.kv}});
    }
    root["shunts"] = std::move(shunts);

    OJson dgs = OJson::array();
    for (const DistributedGenerator& g : net.dgs) {
        dgs.push_back({{"id", g.id}, {"bus", g.bus}, {"phases", g.phases.str()}, {"p_kw", g.p_kw},
                       {"q_kvar", g.q_kvar}, {"unity_pf", g.unity_pf}});
    }
    root["dgs"] = std::move(dgs);

    OJson gens = OJson::array();
    for (const Generator& g : net.generators) {
        gens.push_back({{"id", g.id}, {"bus", g.bus},
                        {"role", g.role == GeneratorRole::Slack ? "slack" : "pv"}, {"p_mw", g.p_mw},
                        {"v_pu", g.v_pu}, {"angle_deg", g.angle_deg},
                        {"x_internal_pu", g.x_internal_pu}, {"machine", g.machine}});
    }
    root["generators"] = std::move(gens);

    OJson machines = OJson::array();
    for (const SynchronousMachine& m : net.machines) {
        const GenrouParameters& g = m.genrou;
        const St1aParameters& e = m.st1a;
        machines.push_back(
            {{"id", m.id}, {"bus", m.bus}, {"mva_base", m.mva_base},
             {"genrou", {{"h", g.h}, {"d", g.d}, {"ra", g.ra}, {"tdo_p", g.tdo_p}, {"tdo_pp", g.tdo_pp},
                         {"tqo_p", g.tqo_p}, {"tqo_pp", g.tqo_pp}, {"xd", g.xd}, {"xq", g.xq},
                         {"xd_p", g.xd_p}, {"xq_p", g.xq_p}, {"x_pp", g.x_pp}, {"xl", g.xl},
                         {"s10", g.s10}, {"s12", g.s12}}},
             {"st1a", {{"tr", e.tr}, {"ka", e.ka}, {"tb", e.tb}, {"tc", e.tc}, {"vrmax", e.vrmax},
                       {"vrmin", e.vrmin}}}});
    }
    root["machines"] = std::move(machines);

    OJson sources = OJson::array();
    for (const Source& s : net.sources) {
        OJson v = OJson::array();
        for (int p : s.phases.list()) v.push_back(complex_json(s.voltage[p]));
        OJson j = {{"id", s.id}, {"bus", s.bus}, {"phases", s.phases.str()}, {"voltage", v}};
        if (!s.paired_bus.empty()) j["paired_bus"] = s.paired_bus;
        sources.push_back(std::move(j));
    }
    root["sources"] = std::move(sources);

    OJson subs = OJson::array();
    for (const Substation& s : net.substations) {
        subs.push_back({{"id", s.id}, {"bus", s.bus}, {"variant", s.variant}, {"feeders", s.feeders},
                        {"load_scale", s.load_scale}, {"joined", s.joined}});
    }
    root["substations"] = std::move(subs);
    return root.dump(1) + "\n";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Network load_network(const std::string& path) { return parse_network(read_text_file(path)); }

void apply_machine_overrides(Network& net, std::string_view text) {
    Json root;
    try {
        root = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::SyntaxError, std::string("machine parameter file: ") + e.what());
    }
    if (!root.contains("machines") || !root.at("machines").is_object()) {
        throw Error(ErrorCode::SyntaxError, "machine parameter file needs a 'machines' object");
    }
    net.reindex();
    for (const auto& [id, spec] : root.at("machines").items()) {
        auto idx = net.machine_index(id);
        if (!idx) throw Error(ErrorCode::ReferenceError, "unknown machine '" + id + "'", id);
        SynchronousMachine& m = net.machines[*idx];
        auto set = [&](const Json& obj, const char* key, double& target) {
            if (obj.contains(key)) target = obj.at(key).get<double>();
        };
        set(spec, "mva_base", m.mva_base);
        if (spec.contains("genrou")) {
            const Json& g = spec.at("genrou");
            GenrouParameters& p = m.genrou;
            for (auto [key, ptr] : {std::pair{"h", &p.h}, {"d", &p.d}, {"ra", &p.ra}, {"tdo_p", &p.tdo_p},
                                    {"tdo_pp", &p.tdo_pp}, {"tqo_p", &p.tqo_p}, {"tqo_pp", &p.tqo_pp},
                                    {"xd", &p.xd}, {"xq", &p.xq}, {"xd_p", &p.xd_p}, {"xq_p", &p.xq_p},
                                    {"x_pp", &p.x_pp}, {"xl", &p.xl}, {"s10", &p.s10}, {"s12", &p.s12}}) {
                set(g, key, *ptr);
            }
        }
        if (spec.contains("st1a")) {
            const Json& e = spec.at("st1a");
            St1aParameters& p = m.st1a;
            for (auto [key, ptr] : {std::pair{"tr", &p.tr}, {"ka", &p.ka}, {"tb", &p.tb}, {"tc", &p.tc},
                                    {"vrmax", &p.vrmax}, {"vrmin", &p.vrmin}}) {
                set(e, key, *ptr);
            }
        }
    }
}

}  // namespace tdsim::netmodel
