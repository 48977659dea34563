#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "lascopf/app.hpp"
#include "lascopf/error.hpp"
#include "lascopf/oracle.hpp"

using namespace lascopf;
using namespace lascopf::test;

namespace {

CaseSpec shorten(CaseSpec spec, int horizon) {
    spec.horizon = horizon;
    for (auto& s : spec.forecast) s.mw.resize(static_cast<std::size_t>(horizon));
    return spec;
}

std::vector<int> labels_of(const ScenarioSet& sc) {
    std::vector<int> l(static_cast<std::size_t>(sc.size()));
    std::iota(l.begin(), l.end(), 0);
    return l;
}

}  // namespace

TEST_CASE("alpha schedules") {
    const auto s = default_interval_schedule();
    CHECK(alpha_at(s, 3) == 10.0);
    CHECK(alpha_at(s, 12) == 2.5);
    CHECK(alpha_at(s, 1000) == 0.5);
    CHECK(alpha_at(default_scenario_schedule(), 1) == 5.0);

    const auto parsed = parse_alpha_schedule("10@5,5@10,2.5@15,1.25@20,0.5");
    for (int mu : {1, 5, 6, 10, 11, 15, 16, 20, 21, 400}) CHECK(alpha_at(parsed, mu) == alpha_at(s, mu));
    CHECK_THROWS(parse_alpha_schedule("5@10,3@5,1"));
    CHECK_THROWS(parse_alpha_schedule("-1"));
}

TEST_CASE("interval multiplier update") {
    auto b = BeliefSet::replicate(2, std::vector<double>{148.0});
    auto lam = LambdaState::zeros(2, 1);
    REQUIRE(lam.slots.size() == 2);
    CHECK(update_interval_duals(lam, b, 10.0).slots == lam.slots);

    b.own[0][0] = 150.0;
    const auto next = update_interval_duals(lam, b, 10.0);
    CHECK(next.slots[0][0] == doctest::Approx(20.0));
    CHECK(next.slots[1][0] == 0.0);
    CHECK(update_interval_duals(lam, b, 0.0).slots == lam.slots);
    CHECK(interval_residual(b) == doctest::Approx(2.0));
}

TEST_CASE("interval subproblem boundary and regulariser terms") {
    auto spec = shorten(load_case("case5.json"), 3);
    const auto net = build_network(spec);
    const auto sc = generate_scenarios(net, std::vector<int>{});
    const auto labels = labels_of(sc);
    const std::vector<double> sched{140.765, 24.2275};
    const auto beliefs = BeliefSet::replicate(3, sched);
    const auto lam = LambdaState::zeros(3, 2);

    const auto ip1 = build_interval_subproblem(1, beliefs, lam, default_interval_app(), net, sc, labels, spec);
    REQUIRE(ip1.gens[0].before);
    CHECK(*ip1.gens[0].before == 140.765);
    CHECK(ip1.gens[0].has_next);
    CHECK_FALSE(ip1.gens[0].has_prev);

    const auto ip3 = build_interval_subproblem(3, beliefs, lam, default_interval_app(), net, sc, labels, spec);
    REQUIRE(ip3.gens[0].after);
    CHECK(*ip3.gens[0].after == 140.765);

    const auto zero = BeliefSet::replicate(3, std::vector<double>{0.0, 0.0});
    const auto ipz = build_interval_subproblem(2, zero, lam, default_interval_app(), net, sc, labels, spec);
    for (const auto& g : ipz.gens) {
        CHECK(g.own_linear == 0.0);
        CHECK(g.prev_linear == 0.0);
        CHECK(g.next_linear == 0.0);
    }

    CHECK_THROWS_AS(build_interval_subproblem(0, beliefs, lam, default_interval_app(), net, sc, labels, spec),
                    ValidationError);
    auto missing = beliefs;
    missing.prev[1].clear();
    CHECK_THROWS_AS(build_interval_subproblem(2, missing, lam, default_interval_app(), net, sc, labels, spec),
                    ValidationError);
}

TEST_CASE("vanishing APP weights reduce to a plain SCOPF") {
    auto spec = shorten(load_case("case5.json"), 3);
    const auto net = build_network(spec);
    const auto sc = generate_scenarios(net, std::vector<int>{1, 2, 3});
    const auto labels = labels_of(sc);
    auto beliefs = BeliefSet::replicate(3, std::vector<double>{150.0, 10.0});
    beliefs.own[1][0] = 100.0;
    AppParams flat = default_interval_app();
    flat.beta = 0.0;
    flat.gamma = 0.0;
    const auto ip = build_interval_subproblem(2, beliefs, LambdaState::zeros(3, 2), flat, net, sc, labels, spec);
    for (std::size_t c = 0; c < labels.size(); ++c) {
        const auto sub = make_scenario_opf(ip, static_cast<int>(c), 1.0, {});
        const int one[1] = {labels[c]};
        const auto plain = make_opf_subproblem(net, sc, one, 2, load_vector(net, spec, 2), false);
        REQUIRE(sub.generators.size() == plain.generators.size());
        for (std::size_t g = 0; g < sub.generators.size(); ++g) {
            const auto& a = sub.generators[g];
            const auto& b = plain.generators[g];
            REQUIRE(a.slots.size() == 1);
            CHECK(a.slots[0].prox_weight == 0.0);
            CHECK(a.slots[0].linear == 0.0);
            CHECK(a.slots[0].cost_weight == b.slots[0].cost_weight);
            CHECK_FALSE(a.before);
            CHECK_FALSE(a.after);
        }
        CHECK(sub.lines.size() == plain.lines.size());
        for (std::size_t r = 0; r < sub.lines.size(); ++r) CHECK(sub.lines[r].susceptance == plain.lines[r].susceptance);
    }
}

TEST_CASE("single scenario needs no consensus iterations") {
    const auto spec = load_case("case5.json");
    const auto net = build_network(spec);
    const auto sc = generate_scenarios(net, std::vector<int>{});
    const auto ip = build_interval_subproblem(1, BeliefSet::replicate(1, std::vector<double>{140.765, 24.2275}),
                                              LambdaState::zeros(1, 2), default_interval_app(), net, sc,
                                              labels_of(sc), shorten(spec, 1));
    const auto sol = scenario_consensus_solve(ip, {});
    CHECK(sol.status == SolveStatus::converged);
    CHECK(sol.inner_iterations == 0);
    CHECK(sol.scenarios.size() == 1);
}

TEST_CASE("scenario consensus on the five-bus interval-1 SCOPF") {
    const auto spec = shorten(load_case("case5.json"), 1);
    const auto net = build_network(spec);
    std::vector<int> all(7);
    std::iota(all.begin(), all.end(), 1);
    const auto sc = generate_scenarios(net, all);
    const auto ip = build_interval_subproblem(1, BeliefSet::replicate(1, std::vector<double>{140.765, 24.2275}),
                                              LambdaState::zeros(1, 2), default_interval_app(), net, sc,
                                              labels_of(sc), spec);
    const auto sol = scenario_consensus_solve(ip, {});
    REQUIRE(sol.status == SolveStatus::converged);
    CHECK(sol.residual <= 0.7);
    REQUIRE(sol.scenarios.size() == 8);
    for (const auto& o : sol.scenarios) {
        CHECK(o.max_imbalance_mw <= 0.06);
        for (std::size_t r = 0; r < o.flows_mw.size(); ++r)
            if (std::isfinite(o.limits_mw[r])) CHECK(std::abs(o.flows_mw[r]) <= o.limits_mw[r] + 0.12);
    }
    const auto oracle = solve_centralized(spec, all, 1);
    REQUIRE(oracle.feasible);
    for (std::size_t g = 0; g < 2; ++g) CHECK(std::abs(sol.own_mw[g] - oracle.dispatch_mw[0][g]) <= 1.0);
}

TEST_CASE("overloaded contingency is reported infeasible with the scenario named") {
    const auto spec = load_case("case3_overload.json");
    const auto net = build_network(spec);
    const auto sc = generate_scenarios(net, spec.contingency_lines);
    REQUIRE(sc.size() > 1);
    std::vector<double> sched;
    for (const auto& g : spec.generators) sched.push_back(g.sched_mw);
    const auto ip = build_interval_subproblem(1, BeliefSet::replicate(spec.horizon, sched),
                                              LambdaState::zeros(spec.horizon, 2), default_interval_app(), net, sc,
                                              labels_of(sc), spec);
    ScopfOptions opt;
    opt.app.max_outer = 50;
    const auto sol = scenario_consensus_solve(ip, opt);
    CHECK(sol.status != SolveStatus::converged);
    if (sol.status == SolveStatus::infeasible) CHECK(sol.message.find("scenario") != std::string::npos);
}

TEST_CASE("layer collapse: one interval without contingencies equals the plain OPF") {
    const auto spec = shorten(load_case("case5.json"), 1);
    OpfFixture f(spec);
    const auto pmp = run_pmp(f.sub, std::nullopt, PmpParams{});
    REQUIRE(pmp.report.converged());
    const auto direct = dispatch_cost(spec, {layer_dispatch_mw(f.sub, pmp.plan, 0)});

    LascopfParams params;
    const auto res = lascopf_solve(spec, f.net, f.scenarios, params);
    REQUIRE(res.status == SolveStatus::converged);
    CHECK(res.outer_iterations == 0);
    CHECK(std::abs(res.objective - direct) <= 1e-9 * std::abs(direct));
}

TEST_CASE("multiplier stationarity at exact agreement") {
    auto b = BeliefSet::replicate(4, std::vector<double>{10.0, 20.0, 30.0});
    LambdaState lam = LambdaState::zeros(4, 3);
    for (auto& s : lam.slots) std::fill(s.begin(), s.end(), 7.5);
    CHECK(update_interval_duals(lam, b, 10.0).slots == lam.slots);
}

TEST_CASE("look-ahead solve, consensus and ramp feasibility, then roll forward") {
    const auto spec = shorten(load_case("case5.json"), 3);
    const auto net = build_network(spec);
    const auto sc = generate_scenarios(net, std::vector<int>{});
    const auto cold = lascopf_solve(spec, net, sc, LascopfParams{});
    REQUIRE(cold.status == SolveStatus::converged);
    REQUIRE(cold.dispatch_mw.size() == 3);
    CHECK(interval_residual(cold.beliefs) <= 0.6);
    for (std::size_t g = 0; g < spec.generators.size(); ++g) {
        double prev = spec.generators[g].sched_mw;
        for (const auto& row : cold.dispatch_mw) {
            const double step = (row[g] - prev) / spec.base_mva;
            CHECK(step <= spec.generators[g].ramp_up / spec.base_mva + 1e-6);
            CHECK(step >= spec.generators[g].ramp_down / spec.base_mva - 1e-6);
            prev = row[g];
        }
    }
    const auto oracle = solve_centralized(spec, std::vector<int>{}, 3);
    REQUIRE(oracle.feasible);
    CHECK(std::abs(cold.objective - oracle.objective) <= 0.002 * oracle.objective);

    std::vector<double> same;
    for (const auto& s : spec.forecast) same.push_back(s.mw.back());
    const auto rolled = mpc_roll(spec, cold, same);
    for (std::size_t g = 0; g < spec.generators.size(); ++g)
        CHECK(rolled.next.generators[g].sched_mw == doctest::Approx(cold.dispatch_mw[0][g]).epsilon(1e-12));
    CHECK(rolled.next.forecast[0].mw.back() == same[0]);

    const auto warm = lascopf_solve(rolled.next, net, sc, LascopfParams{}, &rolled.warm);
    const auto fresh = lascopf_solve(rolled.next, net, sc, LascopfParams{});
    CHECK(warm.status == SolveStatus::converged);
    CHECK(warm.outer_iterations <= fresh.outer_iterations);
    CHECK(warm.pmp_iterations < fresh.pmp_iterations);

    CHECK_THROWS_AS(mpc_roll(spec, cold, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("horizon-one roll is a dispatch sequence") {
    const auto spec = shorten(load_case("case5.json"), 1);
    const auto res = lascopf_solve(spec, LascopfParams{});
    REQUIRE(res.status == SolveStatus::converged);
    std::vector<double> row;
    for (const auto& s : spec.forecast) row.push_back(s.mw[0]);
    const auto rolled = mpc_roll(spec, res, row);
    CHECK(rolled.next.horizon == 1);
    const auto again = lascopf_solve(rolled.next, LascopfParams{});
    CHECK(again.status == SolveStatus::converged);
}
