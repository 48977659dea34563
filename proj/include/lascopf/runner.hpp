#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lascopf/app.hpp"
#include "lascopf/case.hpp"
#include "lascopf/pmp.hpp"

namespace lascopf {

enum class Mode { opf, scopf_pmp, scopf_apmp, lascopf, roll, oracle, compare };

Mode parse_mode(std::string_view text);  // throws UsageError
const char* to_string(Mode mode);

struct RunConfig {
    std::filesystem::path case_path;
    Mode mode = Mode::lascopf;
    std::optional<int> horizon;
    std::optional<std::string> contingencies;  // "all", "none" or comma-separated line ids
    std::optional<std::filesystem::path> forecast_csv;
    PmpParams pmp;
    AppParams scenario = default_scenario_app();
    AppParams interval = default_interval_app();
    int jobs = 1;
    std::uint64_t seed = 0;
    int rolls = 2;
    bool trace_pmp = false;  // APP modes: also emit one trace row per PMP iteration
    std::optional<std::filesystem::path> out_json;
    std::optional<std::filesystem::path> out_trace;
    bool timing = false;  // wall times appear in the JSON only when set
};

struct FeasibilityCheck {
    double max_imbalance_mw = 0.0;
    double imbalance_limit_mw = 0.0;
    double max_ramp_violation_pu = 0.0;
    double ramp_limit_pu = 1e-6;
    double max_flow_excess_mw = 0.0;  // max over lines of |flow| - limit; negative when slack
    double flow_margin_mw = 0.0;
    bool ok = true;
};

struct CompareSummary {
    double percentage_difference = 0.0;          // (a - b) x 100 / b
    std::vector<double> max_dispatch_dev_mw;     // per generator
    std::vector<double> max_lmp_dev;             // per net, scenario-summed price, $/MWh
};

struct RollRecord {
    int roll = 0;
    std::vector<double> dispatch_mw;  // committed first-interval dispatch
    SolveStatus status = SolveStatus::unconverged;
    long warm_iterations = 0;  // scenario-layer iterations
    long cold_iterations = 0;
    double objective = 0.0;
};

struct SolveReport {
    static constexpr int schema_version = 1;

    std::string case_name;
    Mode mode = Mode::lascopf;
    SolveStatus status = SolveStatus::unconverged;
    std::string message;
    std::uint64_t seed = 0;
    int horizon = 1;
    std::vector<int> generator_ids;
    std::vector<int> net_buses;
    std::vector<int> scenario_outages;  // line id per scenario, -1 for the base case

    double objective = 0.0;  // $/h summed over intervals
    long pmp_iterations = 0;
    long scopf_iterations = 0;
    long lascopf_iterations = 0;
    std::vector<std::string> trace_layers;  // layers that emit one trace row per iteration

    bool pmp_converged = false;
    bool scopf_converged = false;
    bool lascopf_converged = false;
    double pmp_r_norm = 0.0;  // worst final residuals over the PMP runs of the last round
    double pmp_s_norm = 0.0;
    std::vector<double> scopf_residuals;    // final scenario consensus residual per interval, MW
    std::vector<double> lascopf_residuals;  // interval consensus residual per outer iteration, MW

    double seq_seconds = 0.0;
    double crit_seconds = 0.0;

    std::vector<std::vector<double>> dispatch_mw;            // [interval][generator]
    // [interval][scenario][net], $/MWh. APP modes scale each scenario copy's price by its 1/L cost share.
    std::vector<std::vector<std::vector<double>>> lmp;
    FeasibilityCheck feasibility;

    std::optional<double> oracle_objective;
    std::optional<CompareSummary> comparison;
    std::vector<RollRecord> rolls;
};

inline constexpr std::string_view trace_csv_header = "layer,outer,inner,interval,scenario,iter,r_norm,s_norm,rho,value";

SolveReport run(const RunConfig& config, const TraceSink& sink = {});

// Objective percentage difference of a against b, dispatch and LMP deviations.
CompareSummary compare(const SolveReport& a, const SolveReport& b);

std::string report_json(const SolveReport& report, bool timing);
std::string trace_csv_row(const TraceRow& row);

int exit_code(SolveStatus status);

// Loads the case and applies horizon, forecast and contingency overrides.
CaseSpec prepare_case(const RunConfig& config);
std::vector<int> parse_contingencies(std::string_view text, const CaseSpec& spec);

}  // namespace lascopf
