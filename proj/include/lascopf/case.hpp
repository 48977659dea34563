#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lascopf {

struct GeneratorSpec {
    int id = 0;
    int bus = 0;
    double cost_a = 0.0;  // $/MW^2h
    double cost_b = 0.0;  // $/MWh
    double cost_c = 0.0;  // $/h
    double p_max = 0.0;
    double p_min = 0.0;
    double ramp_up = 0.0;    // MW per interval, >= 0
    double ramp_down = 0.0;  // MW per interval, <= 0
    double sched_mw = 0.0;   // dispatch of the running interval

    bool operator==(const GeneratorSpec&) const = default;
};

struct LineSpec {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double resistance = 0.0;  // pu
    double reactance = 0.0;   // pu
    double flow_limit = 0.0;  // MW, base case
    double emergency_limit = 0.0;  // MW, post-contingency; defaults to flow_limit

    bool operator==(const LineSpec&) const = default;
};

struct BusLoad {
    int bus = 0;
    double mw = 0.0;

    bool operator==(const BusLoad&) const = default;
};

struct LoadSeries {
    int bus = 0;
    std::vector<double> mw;  // one entry per look-ahead interval

    bool operator==(const LoadSeries&) const = default;
};

struct CaseSpec {
    std::string name;
    double base_mva = 100.0;
    std::vector<int> buses;
    std::vector<GeneratorSpec> generators;
    std::vector<LineSpec> lines;
    std::vector<BusLoad> loads;
    std::vector<LoadSeries> forecast;
    int horizon = 1;
    std::vector<int> contingency_lines;

    bool operator==(const CaseSpec&) const = default;

    int line_index(int line_id) const;       // -1 if absent
    int generator_index(int gen_id) const;   // -1 if absent
    double total_load(int interval) const;
};

CaseSpec parse_case_file(std::string_view text);
std::string serialize_case(const CaseSpec& spec);

// MATPOWER-style m-file subset: baseMVA, bus, gen, branch, gencost.
// Loads become a single-interval forecast.
CaseSpec parse_matpower(std::string_view text);

// Reads a forecast table ("bus,1,2,...") and installs it as the case horizon.
void apply_forecast_csv(CaseSpec& spec, std::string_view text);

// Picks the parser from the extension (.m -> MATPOWER, otherwise native).
CaseSpec read_case_file(const std::filesystem::path& path);

void validate_case(const CaseSpec& spec);

// Interval 1..horizon; per-bus MW in forecast order.
std::vector<BusLoad> forecast_at(const CaseSpec& spec, int interval);

}  // namespace lascopf
