#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "lascopf/case.hpp"

namespace lascopf::test {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(LASCOPF_TEST_DATA) / name; }

inline CaseSpec load_case(const std::string& name) { return read_case_file(data_path(name)); }

inline GeneratorSpec gen(int id, int bus, double a, double b, double p_max, double sched, double ramp = 1000.0) {
    GeneratorSpec g;
    g.id = id;
    g.bus = bus;
    g.cost_a = a;
    g.cost_b = b;
    g.p_max = p_max;
    g.ramp_up = ramp;
    g.ramp_down = -ramp;
    g.sched_mw = sched;
    return g;
}

inline LineSpec line(int id, int from, int to, double x, double limit) {
    return LineSpec{id, from, to, 0.0, x, limit, limit};
}

// Single-horizon case with the given loads installed as the forecast.
inline CaseSpec small_case(std::vector<int> buses, std::vector<GeneratorSpec> gens, std::vector<LineSpec> lines,
                           std::vector<BusLoad> loads) {
    CaseSpec c;
    c.name = "test";
    c.buses = std::move(buses);
    c.generators = std::move(gens);
    c.lines = std::move(lines);
    c.loads = loads;
    for (const auto& l : loads) c.forecast.push_back({l.bus, {l.mw}});
    c.horizon = 1;
    return c;
}

}  // namespace lascopf::test
