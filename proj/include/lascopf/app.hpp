#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lascopf/case.hpp"
#include "lascopf/network.hpp"
#include "lascopf/pmp.hpp"
#include "lascopf/worker_pool.hpp"

namespace lascopf {

struct AlphaSchedule {
    std::vector<std::pair<int, double>> steps;  // (last iteration, alpha), thresholds increasing
    double tail = 0.5;
};

double alpha_at(const AlphaSchedule& schedule, int mu);
AlphaSchedule default_scenario_schedule();
AlphaSchedule default_interval_schedule();
// "5@5,3@10,2.5@15,1.25@20,0.5"
AlphaSchedule parse_alpha_schedule(const std::string& text);
void validate_schedule(const AlphaSchedule& schedule);

// MW-based APP weights.
struct AppParams {
    AlphaSchedule alpha;
    double beta = 200.0;
    double gamma = 100.0;
    double tolerance = 0.6;       // MW, consensus residual
    double step_tolerance = 0.02;  // MW, belief movement per iteration
    int max_outer = 100;
};

AppParams default_scenario_app();
AppParams default_interval_app();

// Beliefs in MW, [interval - 1][generator].
struct BeliefSet {
    int horizon = 0;
    std::vector<std::vector<double>> own;   // P_(t)^(t)
    std::vector<std::vector<double>> prev;  // P_(t)^(t-1), empty row for t = 1
    std::vector<std::vector<double>> next;  // P_(t)^(t+1), empty row for t = horizon

    static BeliefSet replicate(int horizon, std::span<const double> dispatch_mw);
};

// Two slots per coupled pair (t, t+1): even slot own[t] - prev[t+1], odd slot next[t] - own[t+1].
struct LambdaState {
    std::vector<std::vector<double>> slots;  // [slot][generator], $/MWh

    static LambdaState zeros(int horizon, int generators);
};

std::vector<std::vector<double>> interval_disagreement(const BeliefSet& beliefs);
double interval_residual(const BeliefSet& beliefs);
LambdaState update_interval_duals(const LambdaState& lambda, const BeliefSet& beliefs_new, double alpha);

struct IntervalGenTerms {
    bool has_prev = false;
    bool has_next = false;
    std::optional<double> before;  // MW
    std::optional<double> after;   // MW
    double own_center = 0.0, prev_center = 0.0, next_center = 0.0;
    double own_linear = 0.0, prev_linear = 0.0, next_linear = 0.0;
};

// One interval's SCOPF with its interval-layer APP terms (MW units).
struct IntervalSubproblem {
    const DtnNetwork* network = nullptr;
    const ScenarioSet* scenarios = nullptr;
    std::vector<int> labels;
    int interval = 1;
    int horizon = 1;
    std::vector<double> load_mw;
    double beta = 0.0;
    std::vector<IntervalGenTerms> gens;
    std::vector<double> own_belief;
};

IntervalSubproblem build_interval_subproblem(int interval, const BeliefSet& beliefs, const LambdaState& lambda,
                                             const AppParams& params, const DtnNetwork& net,
                                             const ScenarioSet& scenarios, std::span<const int> labels,
                                             const CaseSpec& spec);

// Scenario-layer APP terms for one scenario's consensus variable (MW units).
struct ScenarioGenTerms {
    double prox_weight = 0.0;
    double prox_center = 0.0;
    double linear = 0.0;
};

// Builds the OPF of scenario labels[index]; interval terms apply to the base scenario (index 0) only.
Subproblem make_scenario_opf(const IntervalSubproblem& ip, int index, double cost_weight,
                             std::span<const ScenarioGenTerms> terms);

struct TraceRow {
    std::string layer;  // pmp | scopf | lascopf
    int outer = 0;
    int inner = 0;
    int interval = 0;
    int scenario = -1;
    int iter = 0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    double rho = 0.0;
    double value = 0.0;  // objective for pmp rows, consensus residual (MW) for app rows
};

using TraceSink = std::function<void(const TraceRow&)>;

struct ScenarioOutcome {
    int label = 0;
    int outaged_line_id = -1;
    SolveStatus status = SolveStatus::unconverged;
    int pmp_iterations = 0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    std::vector<double> dispatch_mw;
    std::vector<double> angles;     // per net, radians, net 0 at zero
    std::vector<double> lmp;        // per net, $/MWh
    std::vector<double> flows_mw;   // per line, recomputed from net angles
    std::vector<double> limits_mw;  // per line, +inf when inactive
    double max_imbalance_mw = 0.0;
};

struct ScopfWarm {
    std::vector<std::optional<std::pair<PlanState, DualState>>> pmp;
    std::vector<std::vector<double>> beliefs;
    std::vector<std::vector<double>> lambdas;
};

struct ScopfSolution {
    SolveStatus status = SolveStatus::unconverged;
    std::string message;
    std::vector<double> own_mw;
    std::vector<double> prev_mw;
    std::vector<double> next_mw;
    std::vector<std::vector<double>> scenario_beliefs;
    int inner_iterations = 0;
    long pmp_iterations = 0;
    double residual = 0.0;
    double change = 0.0;  // MW, belief movement in the last iteration
    std::vector<double> residual_trace;
    std::vector<ScenarioOutcome> scenarios;
    double objective = 0.0;
    double seq_seconds = 0.0;
    double crit_seconds = 0.0;
    ScopfWarm warm;
    std::vector<TraceRow> trace;
};

struct ScopfOptions {
    AppParams app = default_scenario_app();
    PmpParams pmp;
    bool record_trace = false;
    bool trace_pmp = false;  // also keep one row per PMP iteration
    int outer = 0;           // tags trace rows
};

ScopfSolution scenario_consensus_solve(const IntervalSubproblem& ip, const ScopfOptions& options,
                                       const ScopfWarm* warm = nullptr, WorkerPool* pool = nullptr);

struct LascopfParams {
    PmpParams pmp;
    AppParams scenario = default_scenario_app();
    AppParams interval = default_interval_app();
    bool record_trace = false;
    bool trace_pmp = false;
};

struct LascopfWarm {
    BeliefSet beliefs;
    LambdaState lambda;
    std::vector<ScopfWarm> intervals;
};

struct LascopfResult {
    SolveStatus status = SolveStatus::unconverged;
    std::string message;
    std::vector<std::vector<double>> dispatch_mw;  // [interval - 1][generator]
    double objective = 0.0;
    int outer_iterations = 0;
    long inner_iterations = 0;
    long pmp_iterations = 0;
    std::vector<double> outer_residuals;
    std::vector<ScopfSolution> intervals;
    BeliefSet beliefs;
    LambdaState lambda;
    double seq_seconds = 0.0;
    double crit_seconds = 0.0;
    LascopfWarm warm;
};

LascopfResult lascopf_solve(const CaseSpec& spec, const DtnNetwork& net, const ScenarioSet& scenarios,
                            const LascopfParams& params, const LascopfWarm* warm = nullptr,
                            WorkerPool* pool = nullptr, const TraceSink& sink = {});

// Convenience: builds the network and scenarios from the case contingency list.
LascopfResult lascopf_solve(const CaseSpec& spec, const LascopfParams& params);

struct RollOutput {
    CaseSpec next;
    LascopfWarm warm;
};

// new_row: one MW value per forecast series, in case forecast order.
RollOutput mpc_roll(const CaseSpec& spec, const LascopfResult& solved, std::span<const double> new_row);

// Generator cost of a dispatch table in $/h.
double dispatch_cost(const CaseSpec& spec, const std::vector<std::vector<double>>& dispatch_mw);

}  // namespace lascopf
