#include "tdsim/netmodel/network.hpp"

#include <bit>
#include <stdexcept>

namespace tdsim::netmodel {

PhaseSet PhaseSet::parse(std::string_view text) {
    std::uint8_t bits = 0;
    for (char c : text) {
        int p = -1;
        if (c == 'A' || c == 'a') p = 0;
        if (c == 'B' || c == 'b') p = 1;
        if (c == 'C' || c == 'c') p = 2;
        if (p < 0) {
            throw std::invalid_argument("bad phase letter '" + std::string(1, c) + "'");
        }
        const auto bit = static_cast<std::uint8_t>(1u << p);
        if (bits & bit) {
            throw std::invalid_argument("repeated phase '" + std::string(1, c) + "'");
        }
        bits |= bit;
    }
    return PhaseSet(bits);
}

std::size_t PhaseSet::size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<int> PhaseSet::list() const {
    std::vector<int> out;
    for (int p = 0; p < 3; ++p) {
        if (contains(p)) out.push_back(p);
    }
    return out;
}

int PhaseSet::position(int phase) const noexcept {
    if (!contains(phase)) return -1;
    int pos = 0;
    for (int p = 0; p < phase; ++p) {
        if (contains(p)) ++pos;
    }
    return pos;
}

std::string PhaseSet::str() const {
    std::string s;
    for (int p : list()) s.push_back(static_cast<char>('A' + p));
    return s;
}

std::size_t load_element_count(const Load& load) {
    if (load.connection == LoadConnection::Wye) return load.phases.size();
    return load.phases.size() == 3 ? 3 : 1;
}

void Network::reindex() {
    auto fill = [](auto& map, const auto& items) {
        map.clear();
        map.reserve(items.size());
        for (std::size_t i = 0; i < items.size(); ++i) map.emplace(items[i].id, i);
    };
    fill(bus_lookup_, buses);
    fill(branch_lookup_, branches);
    fill(machine_lookup_, machines);
    fill(source_lookup_, sources);
}

namespace {
std::optional<std::size_t> find(const std::unordered_map<std::string, std::size_t>& map,
                                std::string_view id) {
    auto it = map.find(std::string(id));
    if (it == map.end()) return std::nullopt;
    return it->second;
}
}  // namespace

std::optional<std::size_t> Network::bus_index(std::string_view id) const { return find(bus_lookup_, id); }
std::optional<std::size_t> Network::branch_index(std::string_view id) const {
    return find(branch_lookup_, id);
}
std::optional<std::size_t> Network::machine_index(std::string_view id) const {
    return find(machine_lookup_, id);
}
std::optional<std::size_t> Network::source_index(std::string_view id) const {
    return find(source_lookup_, id);
}

bool Network::operator==(const Network& o) const {
    return name == o.name && notes == o.notes && frequency_hz == o.frequency_hz &&
           mva_base == o.mva_base && buses == o.buses && branches == o.branches &&
           loads == o.loads && shunts == o.shunts && dgs == o.dgs && generators == o.generators &&
           machines == o.machines && sources == o.sources && substations == o.substations;
}

const char* to_string(BusKind kind) {
    switch (kind) {
    case BusKind::Transmission: return "transmission";
    case BusKind::Distribution: return "distribution";
    case BusKind::Boundary: return "boundary";
    }
    return "?";
}

const char* to_string(BranchKind kind) {
    switch (kind) {
    case BranchKind::Line: return "line";
    case BranchKind::Cable: return "cable";
    case BranchKind::Transformer: return "transformer";
    case BranchKind::Regulator: return "regulator";
    case BranchKind::Switch: return "switch";
    }
    return "?";
}

const char* to_string(Winding winding) {
    switch (winding) {
    case Winding::WyeGrounded: return "wye-g";
    case Winding::Wye: return "wye";
    case Winding::Delta: return "delta";
    }
    return "?";
}

PhaseMatrix three_phase_from_sequence(Phasor z1, Phasor z0, double length, double asymmetry) {
    PhaseMatrix m(3);
    const Phasor self = (z0 + 2.0 * z1) / 3.0 * length;
    const Phasor mutual = (z0 - z1) / 3.0 * length;
    const double scale[3] = {1.0 + asymmetry, 1.0, 1.0 - asymmetry};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            m(i, j) = i == j ? self * scale[i] : mutual;
        }
    }
    return m;
}

}  // namespace tdsim::netmodel
