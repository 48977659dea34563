#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lascopf/network.hpp"
#include "lascopf/prox.hpp"

namespace lascopf {

// Devices of one OPF-shaped problem over `layers` (scenario, interval) copies of the network.
struct Subproblem {
    const DtnNetwork* network = nullptr;
    int layers = 1;
    std::vector<int> layer_scenario;
    std::vector<int> layer_interval;
    std::vector<GenLocalProblem> generators;  // target_slots has one entry per layer
    std::vector<LineLocalProblem> lines;      // per-layer susceptance and limit
    std::vector<std::vector<double>> load_mw; // [load][layer]
};

// Plain OPF for the given scenario labels in one interval (no APP terms). Every layer feeds the
// single dispatch slot; with ramp_from_sched the slot is ramp-limited against the scheduled dispatch.
Subproblem make_opf_subproblem(const DtnNetwork& net, const ScenarioSet& scenarios, std::span<const int> labels,
                               int interval, std::span<const double> load_mw, bool ramp_from_sched = true);

// Index layout: value for (layer, terminal) at layer * terminals + terminal; nets likewise.
struct PlanState {
    int layers = 0;
    int terminals = 0;
    int nets = 0;
    std::vector<double> p;
    std::vector<double> theta;
    std::vector<double> z;
    std::vector<double> xi;
    std::vector<double> p_avg;      // per (layer, net)
    std::vector<double> theta_avg;  // per (layer, net)
    std::vector<std::vector<double>> gen_slots;

    static PlanState zeros(const Subproblem& sub);
};

struct DualState {
    std::vector<double> u;
    std::vector<double> v;
    double rho = 1.0;

    static DualState zeros(const Subproblem& sub, double rho);
    // Power duals set to the copper-plate clearing price of each layer.
    static DualState seeded(const Subproblem& sub, double rho);
};

struct PmpParams {
    double rho0 = 1000.0;
    double eps_pri = 0.06;
    double eps_dual = 0.6;
    std::optional<double> eps_abs;
    int max_iter = 20000;
    int rho_freeze_iter = 3000;
    double k_p = 0.1;
    double k_d = 0.01;
    double rho_min = 1e-4;
    double rho_max = 1e4;
    double divergence_limit = 1e6;
    bool adapt_rho = false;
    bool seed_prices = true;
    // Cold starts pick rho from the stiffest generator slot instead of rho0.
    bool auto_rho = true;
    bool record_trace = false;
};

struct Residuals {
    std::vector<double> r;
    std::vector<double> s;
    double r_norm = 0.0;
    double s_norm = 0.0;
    double rho = 1.0;
};

enum class SolveStatus { converged, unconverged, infeasible, diverged };
const char* to_string(SolveStatus status);

struct PmpTraceRecord {
    int iter = 0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    double rho = 0.0;
    double objective = 0.0;
};

struct PmpReport {
    SolveStatus status = SolveStatus::unconverged;
    int iterations = 0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    double rho = 0.0;
    double objective = 0.0;
    double wall_seconds = 0.0;
    std::string message;
    std::vector<PmpTraceRecord> trace;

    bool converged() const { return status == SolveStatus::converged; }
};

struct PmpResult {
    PlanState plan;
    DualState duals;
    PmpReport report;
};

using PmpSink = std::function<void(const PmpTraceRecord&)>;

// One broadcast-gather round: device prox calls, then net_update.
void pmp_iterate(const Subproblem& sub, PlanState& plan, DualState& duals);

// Gather step only: averages, z, xi, u, v from the current P and theta.
void net_update(const DtnNetwork& net, PlanState& plan, DualState& duals);

// Power entries in MW (scaled by power_scale), angles in radians.
Residuals compute_residuals(const DtnNetwork& net, const PlanState& prev, const PlanState& cur, double rho,
                            double power_scale);

struct StopThresholds {
    double pri = 0.0;
    double dual = 0.0;
};
StopThresholds stop_thresholds(const PmpParams& params, int terminals, int scenario_count);

// Throws DivergenceError on NaN.
bool check_stop(const Residuals& res, const StopThresholds& thresholds);

double adapt_rho(double rho, const Residuals& res, const Residuals* prev_res, int iter, const PmpParams& params);

// Rescales the scaled duals after a rho change so rho * u is preserved.
void rescale_duals(DualState& duals, double new_rho);

double subproblem_objective(const Subproblem& sub, const PlanState& plan);

double auto_rho(const Subproblem& sub, double fallback);

PmpResult run_pmp(const Subproblem& sub, const std::optional<std::pair<PlanState, DualState>>& warm,
                  const PmpParams& params, const PmpSink& sink = {});

// Generator dispatch (MW) of the slot fed by `layer`.
std::vector<double> layer_dispatch_mw(const Subproblem& sub, const PlanState& plan, int layer);

// LMP in $/MWh per (layer, net), recovered from the scaled power prices.
std::vector<double> recover_lmp(const Subproblem& sub, const DualState& duals);

// Net angles (radians), shifted so net 0 has angle 0 in each layer.
std::vector<double> net_angles(const PlanState& plan);

}  // namespace lascopf
