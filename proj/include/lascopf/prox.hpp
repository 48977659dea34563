#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lascopf {

// One dispatch variable in a generator's time chain.
struct GenSlot {
    double cost_weight = 0.0;  // share of the generator cost charged here
    bool boxed = true;         // subject to [p_min, p_max]
    double prox_weight = 0.0;  // beta, pu-scaled
    double prox_center = 0.0;
    double linear = 0.0;       // consensus and multiplier terms, pu-scaled
};

// Slots are consecutive intervals; neighbours are ramp-coupled.
struct GenLocalProblem {
    int id = 0;
    double cost_a = 0.0;
    double cost_b = 0.0;
    double cost_c = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
    double ramp_down = 0.0;
    double ramp_up = 0.0;
    std::vector<GenSlot> slots;
    std::vector<int> target_slots;  // slot fed by each power target
    std::optional<double> before;   // fixed dispatch preceding slot 0
    std::optional<double> after;    // fixed value following the last slot

    // Throws InfeasibleError naming the first empty constraint pair.
    void check_feasible() const;
    bool feasible(std::span<const double> p, double tol = 1e-12) const;
    // Cost, proximity and linear terms; no coupling penalty.
    double local_objective(std::span<const double> p) const;
};

struct LineLocalProblem {
    int id = 0;
    std::vector<double> susceptance;  // per layer; 0 marks the outaged layer
    std::vector<double> limit;        // per layer, pu
};

struct ProxInput {
    std::vector<double> v_p;
    std::vector<double> v_theta;
    double rho = 1.0;
};

struct ProxOutput {
    std::vector<double> p;
    std::vector<double> theta;
    std::vector<double> slots;  // generator only
};

ProxOutput prox_generator(const GenLocalProblem& prob, const ProxInput& in);
ProxOutput prox_line(const LineLocalProblem& prob, const ProxInput& in);
ProxOutput prox_load(double fixed_mw, double base_mva, const ProxInput& in);

// Allocation-free kernels used by the iteration engine.

// target_sum[k], target_count[k]: sum and count of power targets on slot k.
void solve_generator_slots(const GenLocalProblem& prob, double rho, std::span<const double> target_sum,
                           std::span<const int> target_count, std::span<double> out);

struct LineTerminalPair {
    double p1, p2, theta1, theta2;
};

// Projection onto {p1 = -b(t1 - t2), p2 = -p1, |p1| <= limit}; b == 0 is the outage.
LineTerminalPair project_line(double susceptance, double limit, double p1, double p2, double theta1, double theta2);

}  // namespace lascopf
