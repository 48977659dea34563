#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "lascopf/error.hpp"
#include "lascopf/oracle.hpp"

using namespace lascopf;
using namespace lascopf::test;

namespace {

PmpParams quiet() {
    PmpParams p;
    p.max_iter = 50000;
    return p;
}

}  // namespace

TEST_CASE("net update on a two-terminal net") {
    OpfFixture f(load_case("case1.json"));
    auto plan = PlanState::zeros(f.sub);
    auto duals = DualState::zeros(f.sub, 1.0);
    REQUIRE(plan.p.size() == 2);
    plan.p = {3.0, -1.0};
    net_update(f.net, plan, duals);
    CHECK(plan.p_avg[0] == 1.0);
    CHECK(plan.z == std::vector<double>{2.0, -2.0});
    CHECK(duals.u == std::vector<double>{1.0, 1.0});

    const auto res = compute_residuals(f.net, PlanState::zeros(f.sub), plan, 1.0, 1.0);
    CHECK(res.r[0] == 1.0);
}

TEST_CASE("balanced consistent state is a fixed point of the dual update") {
    OpfFixture f(load_case("case1.json"));
    auto plan = PlanState::zeros(f.sub);
    auto duals = DualState::zeros(f.sub, 1.0);
    duals.u = {0.3, 0.3};
    duals.v = {0.1, -0.1};
    plan.p = {1.4, -1.4};
    plan.theta = {0.2, 0.2};
    const auto u0 = duals.u, v0 = duals.v;
    net_update(f.net, plan, duals);
    CHECK(duals.u == u0);
    CHECK(duals.v == v0);
}

TEST_CASE("residuals: converged fixed point and linearity of s in rho") {
    auto f = five_bus_base();
    auto plan = PlanState::zeros(f->sub);
    auto duals = DualState::zeros(f->sub, 1.0);
    const auto zero = compute_residuals(f->net, plan, plan, 1.0, 100.0);
    CHECK(zero.r_norm == 0.0);
    CHECK(zero.s_norm == 0.0);

    auto prev = plan;
    for (int i = 0; i < 5; ++i) {
        prev = plan;
        pmp_iterate(f->sub, plan, duals);
    }
    const auto a = compute_residuals(f->net, prev, plan, 3.0, 100.0);
    const auto b = compute_residuals(f->net, prev, plan, 6.0, 100.0);
    REQUIRE(a.s_norm > 0.0);
    CHECK(b.s_norm == doctest::Approx(2.0 * a.s_norm).epsilon(1e-14));
    CHECK(b.r_norm == a.r_norm);

    auto wrong = plan;
    wrong.p.pop_back();
    CHECK_THROWS_AS(compute_residuals(f->net, prev, wrong, 1.0, 100.0), ValidationError);
}

TEST_CASE("check_stop decisions") {
    const PmpParams p;
    const auto th = stop_thresholds(p, 20, 1);
    Residuals r;
    r.r_norm = 0.05;
    r.s_norm = 0.5;
    CHECK(check_stop(r, th));
    r.r_norm = 0.07;
    r.s_norm = 0.1;
    CHECK_FALSE(check_stop(r, th));
    r.r_norm = NAN;
    CHECK_THROWS_AS(check_stop(r, th), DivergenceError);
}

TEST_CASE("absolute tolerance normalisation") {
    PmpParams p;
    p.eps_abs = 0.01;
    const auto th = stop_thresholds(p, 20, 8);
    CHECK(std::abs(th.pri - 0.01 * std::sqrt(160.0)) <= 1e-12);
    CHECK(std::abs(th.dual - 0.01 * std::sqrt(160.0)) <= 1e-12);
}

TEST_CASE("adapt_rho controller law") {
    PmpParams p;
    p.adapt_rho = true;
    p.k_p = 0.1;
    p.k_d = 0.0;
    Residuals r;
    r.r_norm = 0.2;
    r.s_norm = 0.2;
    r.rho = 1.0;
    CHECK(adapt_rho(1.0, r, nullptr, 1, p) == 1.0);
    r.s_norm = 2.0;
    CHECK(adapt_rho(1.0, r, nullptr, 1, p) == doctest::Approx(std::pow(10.0, 0.1)).epsilon(1e-12));
    CHECK(adapt_rho(1.0, r, nullptr, 1, p) == doctest::Approx(1.2589).epsilon(1e-4));
    CHECK(adapt_rho(1.0, r, nullptr, 3001, p) == 1.0);
    r.r_norm = 0.0;
    CHECK(adapt_rho(1.0, r, nullptr, 1, p) == 1.0);

    p.k_p = 50.0;
    r.r_norm = 1e-9;
    r.s_norm = 1e9;
    CHECK(adapt_rho(1.0, r, nullptr, 1, p) == p.rho_max);
}

TEST_CASE("single bus converges to the load") {
    OpfFixture f(load_case("case1.json"));
    const auto res = run_pmp(f.sub, std::nullopt, quiet());
    REQUIRE(res.report.converged());
    CHECK(res.report.r_norm <= 0.06);
    CHECK(res.plan.gen_slots[0][0] == doctest::Approx(1.40).epsilon(0.06 / 140.0));
}

TEST_CASE("five-bus base dispatch") {
    auto f = five_bus_base();
    const auto res = run_pmp(f->sub, std::nullopt, quiet());
    REQUIRE(res.report.converged());
    const auto mw = layer_dispatch_mw(f->sub, res.plan, 0);
    CHECK(std::abs(mw[0] - 140.765) <= 0.5);
    CHECK(std::abs(mw[1] - 24.2275) <= 0.5);

    std::optional<std::pair<PlanState, DualState>> warm{{res.plan, res.duals}};
    const auto again = run_pmp(f->sub, warm, quiet());
    CHECK(again.report.converged());
    CHECK(again.report.iterations * 20 <= res.report.iterations);
}

TEST_CASE("prices agree with the centralized balance duals") {
    auto f = five_bus_base();
    const auto res = run_pmp(f->sub, std::nullopt, quiet());
    REQUIRE(res.report.converged());
    const auto lmp = recover_lmp(f->sub, res.duals);
    const auto oracle = solve_centralized(f->spec, std::vector<int>{}, 1);
    REQUIRE(oracle.feasible);
    for (int n = 0; n < f->net.net_count(); ++n) {
        const double want = oracle.lmp[0][0][static_cast<std::size_t>(n)];
        CHECK(std::abs(lmp[static_cast<std::size_t>(n)] - want) <= 0.02 * std::abs(want));
    }
}

TEST_CASE("net-update identities and price uniformity hold on every iteration") {
    auto f = std::make_unique<OpfFixture>(load_case("case5.json"), 1, std::vector<int>{1, 3, 6});
    auto plan = PlanState::zeros(f->sub);
    auto duals = DualState::seeded(f->sub, auto_rho(f->sub, 1000.0));
    const int T = f->net.terminal_count();
    double worst_mean = 0.0, worst_xi = 0.0;
    bool uniform = true;
    for (int it = 0; it < 300; ++it) {
        pmp_iterate(f->sub, plan, duals);
        for (int l = 0; l < f->sub.layers; ++l)
            for (const auto& terms : f->net.net_terminals) {
                double zs = 0.0;
                const auto first = static_cast<std::size_t>(l * T + terms.front());
                for (int t : terms) {
                    const auto i = static_cast<std::size_t>(l * T + t);
                    zs += plan.z[i];
                    worst_xi = std::max(worst_xi, std::abs(plan.xi[i] - plan.xi[first]));
                    uniform = uniform && duals.u[i] == duals.u[first];
                }
                worst_mean = std::max(worst_mean, std::abs(zs / static_cast<double>(terms.size())));
            }
    }
    CHECK(worst_mean <= 1e-12);
    CHECK(worst_xi == 0.0);
    CHECK(uniform);
}

TEST_CASE("constant angle shift leaves power iterates unchanged") {
    std::mt19937 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto f = five_bus_base();
        auto plan = PlanState::zeros(f->sub);
        auto duals = DualState::seeded(f->sub, 10.0 + trial);
        for (int it = 0; it < 5 + trial; ++it) pmp_iterate(f->sub, plan, duals);
        auto shifted = plan;
        auto shifted_duals = duals;
        const double c = g(rng);
        for (auto& x : shifted.theta) x += c;
        for (auto& x : shifted.xi) x += c;
        for (auto& x : shifted.theta_avg) x += c;
        for (int it = 0; it < 20; ++it) {
            pmp_iterate(f->sub, plan, duals);
            pmp_iterate(f->sub, shifted, shifted_duals);
            for (std::size_t i = 0; i < plan.p.size(); ++i) REQUIRE(std::abs(plan.p[i] - shifted.p[i]) <= 1e-9);
        }
    }
}

TEST_CASE("identical inputs give identical traces") {
    auto f = five_bus_base();
    auto params = quiet();
    params.record_trace = true;
    const auto a = run_pmp(f->sub, std::nullopt, params);
    const auto b = run_pmp(f->sub, std::nullopt, params);
    REQUIRE(a.report.trace.size() == b.report.trace.size());
    for (std::size_t i = 0; i < a.report.trace.size(); ++i) {
        CHECK(a.report.trace[i].r_norm == b.report.trace[i].r_norm);
        CHECK(a.report.trace[i].s_norm == b.report.trace[i].s_norm);
    }
    CHECK(static_cast<int>(a.report.trace.size()) == a.report.iterations);
}

TEST_CASE("iteration cap yields a report instead of an error") {
    auto f = five_bus_base();
    PmpParams p;
    p.max_iter = 5;
    const auto res = run_pmp(f->sub, std::nullopt, p);
    CHECK(res.report.status == SolveStatus::unconverged);
    CHECK(res.report.iterations == 5);
    CHECK(res.report.r_norm > 0.0);
}

TEST_CASE("empty ramp window surfaces as an infeasible report") {
    auto spec = load_case("case5.json");
    spec.generators[1].p_min = 60.0;
    spec.generators[1].sched_mw = 60.0;
    OpfFixture f(spec);
    f.sub.generators[1].before = 0.0;
    const auto res = run_pmp(f.sub, std::nullopt, quiet());
    CHECK(res.report.status == SolveStatus::infeasible);
    CHECK(res.report.message.find("generator 2") != std::string::npos);
}
