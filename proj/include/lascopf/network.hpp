#pragma once

#include <span>
#include <vector>

#include "lascopf/case.hpp"

namespace lascopf {

enum class DeviceKind { generator = 0, line = 1, load = 2 };

struct Device {
    DeviceKind kind = DeviceKind::generator;
    int index = 0;  // position within its kind
    int id = 0;     // case id (bus id for loads)
    int first_terminal = 0;
    int terminal_count = 1;
};

struct Terminal {
    int device = 0;
    int slot = 0;
    int net = 0;
};

// Per-unit copies of the case records.
struct GeneratorData {
    int id = 0;
    int net = 0;
    int terminal = 0;
    double cost_a = 0.0;  // $/h per pu^2
    double cost_b = 0.0;  // $/h per pu
    double cost_c = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
    double ramp_up = 0.0;
    double ramp_down = 0.0;
    double sched = 0.0;
};

struct LineData {
    int id = 0;
    int from_net = 0;
    int to_net = 0;
    int terminal = 0;  // first of two
    double reactance = 0.0;
    double susceptance = 0.0;
    double limit = 0.0;
    double emergency_limit = 0.0;
};

struct LoadData {
    int bus = 0;
    int net = 0;
    int terminal = 0;
};

struct DtnNetwork {
    double base_mva = 100.0;
    std::vector<int> net_bus;
    std::vector<Device> devices;
    std::vector<Terminal> terminals;
    std::vector<std::vector<int>> net_terminals;
    std::vector<std::vector<int>> neighbors;
    std::vector<GeneratorData> generators;
    std::vector<LineData> lines;
    std::vector<LoadData> loads;

    int net_count() const { return static_cast<int>(net_bus.size()); }
    int terminal_count() const { return static_cast<int>(terminals.size()); }
    int net_of_bus(int bus) const;  // -1 if absent
    int line_index(int line_id) const;
};

DtnNetwork build_network(const CaseSpec& spec);

// Load MW per network load device for the given interval (1..horizon).
std::vector<double> load_vector(const DtnNetwork& net, const CaseSpec& spec, int interval);

struct ScenarioSet {
    std::vector<int> outaged_line;                   // per label, line index or -1
    std::vector<std::vector<double>> susceptance;    // [label][line], pu
    std::vector<std::vector<double>> flow_limit;     // [label][line], pu; +inf when inactive

    int size() const { return static_cast<int>(outaged_line.size()); }
};

// Contingencies are line ids; label 0 is the base case.
ScenarioSet generate_scenarios(const DtnNetwork& net, std::span<const int> contingency_lines);
bool connectivity_check(const DtnNetwork& net, const ScenarioSet& scenarios, int label);

// Line ids whose single outage keeps the network connected.
std::vector<int> non_islanding_lines(const DtnNetwork& net);

}  // namespace lascopf
