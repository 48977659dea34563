#pragma once

#include <span>
#include <string>
#include <vector>

#include "lascopf/case.hpp"
#include "lascopf/network.hpp"

namespace lascopf {

struct OracleOptions {
    double tolerance = 1e-10;
    int max_iter = 300;
    bool polish = true;
};

struct OracleSolution {
    bool feasible = false;
    double infeasibility_mw = 0.0;  // least total nodal imbalance over the constraint set
    std::string certificate;

    int horizon = 0;
    std::vector<int> outaged_line_ids;                        // per scenario, -1 for the base case
    std::vector<std::vector<double>> dispatch_mw;             // [interval][generator]
    std::vector<std::vector<std::vector<double>>> angles;     // [interval][scenario][bus], rad
    std::vector<std::vector<std::vector<double>>> lmp;        // [interval][scenario][bus], $/MWh
    std::vector<std::vector<std::vector<double>>> flows_mw;   // [interval][scenario][line]
    double objective = 0.0;                                   // $/h summed over intervals

    double kkt_residual = 0.0;
    double max_imbalance_mw = 0.0;
    int iterations = 0;
    bool polished = false;
};

// Centralized look-ahead SCOPF in the conventional angle form. Contingencies are line ids;
// horizon 0 takes the case horizon.
OracleSolution solve_centralized(const CaseSpec& spec, std::span<const int> contingency_lines, int horizon = 0,
                                 const OracleOptions& options = {});

// Per-line flows in pu for one scenario, angles indexed by net.
std::vector<double> dc_flows(std::span<const double> angles, int label, const ScenarioSet& scenarios,
                             const DtnNetwork& net);

}  // namespace lascopf
