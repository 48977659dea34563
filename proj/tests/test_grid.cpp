#include <algorithm>
#include <numeric>
#include <queue>
#include <random>

#include "doctest.h"
#include "lascopf/error.hpp"
#include "lascopf/network.hpp"
#include "support.hpp"

using namespace lascopf;
using namespace lascopf::test;

namespace {

bool reachable_brute(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : adj[static_cast<std::size_t>(v)])
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = true;
                q.push(w);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

CaseSpec two_bus() {
    return small_case({1, 2}, {gen(1, 1, 0.01, 10, 200, 50)}, {line(1, 1, 2, 0.1, 100)}, {{2, 50}});
}

}  // namespace

TEST_CASE("parse reads generator and line records of the five-bus case") {
    const auto spec = load_case("case5.json");
    REQUIRE(spec.generators.size() == 2);
    CHECK(spec.generators[0].cost_a == doctest::Approx(0.0430293).epsilon(1e-15));
    CHECK(spec.generators[0].cost_b == 20.0);
    CHECK(spec.generators[0].p_max == 332.4);
    CHECK(spec.generators[0].ramp_up == 20.0);
    CHECK(spec.generators[0].ramp_down == -20.0);
    CHECK(spec.generators[0].sched_mw == 140.765);
    CHECK(spec.lines[0].reactance == 0.06);
    CHECK(spec.lines[0].flow_limit == 100.0);
    CHECK(spec.lines[0].from_bus == 1);
    CHECK(spec.lines[0].to_bus == 2);
}

TEST_CASE("empty generator list is rejected") {
    auto spec = load_case("case5.json");
    spec.generators.clear();
    CHECK_THROWS_WITH_AS(validate_case(spec), "no generators", ValidationError);
    CHECK_THROWS_AS(parse_case_file(serialize_case(spec)), ValidationError);
}

TEST_CASE("malformed documents and bad records raise errors") {
    CHECK_THROWS_AS(parse_case_file("{\"buses\": [1,"), ParseError);
    auto spec = load_case("case5.json");
    spec.generators[1].p_min = 200.0;
    CHECK_THROWS_AS(validate_case(spec), ValidationError);
    spec = load_case("case5.json");
    spec.lines[2].reactance = 0.0;
    CHECK_THROWS_AS(validate_case(spec), ValidationError);
}

TEST_CASE("serialize then parse is the identity") {
    for (const char* name : {"case1.json", "case3_overload.json", "case5.json", "case14.json"}) {
        const auto spec = load_case(name);
        CHECK(parse_case_file(serialize_case(spec)) == spec);
    }
}

TEST_CASE("build_network counts nets and terminals") {
    const auto spec = load_case("case5.json");
    const auto net = build_network(spec);
    CHECK(net.net_count() == 5);
    CHECK(net.terminal_count() == 20);

    const auto one = load_case("case1.json");
    const auto n1 = build_network(one);
    CHECK(n1.net_count() == 1);
    CHECK(n1.terminal_count() == 2);
    CHECK(n1.net_terminals[0].size() == 2);

    for (const char* name : {"case3_overload.json", "case14.json"}) {
        const auto s = load_case(name);
        const auto n = build_network(s);
        CHECK(n.terminal_count() ==
              static_cast<int>(s.generators.size() + s.loads.size() + 2 * s.lines.size()));
        std::vector<int> owners(static_cast<std::size_t>(n.terminal_count()), 0);
        for (const auto& terms : n.net_terminals)
            for (int t : terms) owners[static_cast<std::size_t>(t)]++;
        CHECK(std::all_of(owners.begin(), owners.end(), [](int c) { return c == 1; }));
    }
}

TEST_CASE("per-unit conversion on the system base") {
    auto spec = small_case({1}, {gen(1, 1, 0.0, 10, 300, 100)}, {}, {{1, 100}});
    const auto net = build_network(spec);
    CHECK(net.generators[0].p_max == doctest::Approx(3.0));
    CHECK(net.generators[0].sched == doctest::Approx(1.0));
    const auto five = build_network(load_case("case5.json"));
    CHECK(five.lines[0].susceptance == doctest::Approx(1.0 / 0.06));
    CHECK(five.lines[0].limit == doctest::Approx(1.0));
}

TEST_CASE("unknown bus reference is a build error") {
    auto spec = two_bus();
    spec.lines[0].to_bus = 9;
    CHECK_THROWS_AS(build_network(spec), BuildError);
}

TEST_CASE("scenario generation") {
    const auto spec = load_case("case5.json");
    const auto net = build_network(spec);
    std::vector<int> all(7);
    std::iota(all.begin(), all.end(), 1);
    const auto sc = generate_scenarios(net, all);
    CHECK(sc.size() == 8);
    CHECK(sc.outaged_line[0] == -1);
    for (int c = 1; c < sc.size(); ++c) {
        const auto& b = sc.susceptance[static_cast<std::size_t>(c)];
        int zeros = 0;
        for (std::size_t r = 0; r < b.size(); ++r) {
            if (b[r] == 0.0) {
                ++zeros;
                CHECK(std::isinf(sc.flow_limit[static_cast<std::size_t>(c)][r]));
            } else {
                CHECK(b[r] == sc.susceptance[0][r]);
            }
        }
        CHECK(zeros == 1);
    }

    const auto base = generate_scenarios(net, std::vector<int>{});
    CHECK(base.size() == 1);

    const auto two = two_bus();
    const auto n2 = build_network(two);
    CHECK_THROWS_AS(generate_scenarios(n2, std::vector<int>{1}), BuildError);
}

TEST_CASE("connectivity_check examples") {
    const auto net = build_network(load_case("case5.json"));
    const auto sc = generate_scenarios(net, std::vector<int>{1});
    CHECK(connectivity_check(net, sc, 0));
    CHECK(connectivity_check(net, sc, 1));

    const auto n2 = build_network(two_bus());
    ScenarioSet manual = generate_scenarios(n2, std::vector<int>{});
    manual.outaged_line.push_back(0);
    manual.susceptance.push_back({0.0});
    manual.flow_limit.push_back({INFINITY});
    CHECK(connectivity_check(n2, manual, 0));
    CHECK_FALSE(connectivity_check(n2, manual, 1));
}

TEST_CASE("connectivity_check agrees with brute-force reachability") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 8);
        std::vector<int> buses(static_cast<std::size_t>(n));
        std::iota(buses.begin(), buses.end(), 1);
        std::vector<LineSpec> lines;
        std::vector<std::pair<int, int>> edges;
        const int m = 1 + static_cast<int>(rng() % static_cast<unsigned>(2 * n));
        for (int k = 0; k < m; ++k) {
            int a = static_cast<int>(rng() % static_cast<unsigned>(n));
            int b = static_cast<int>(rng() % static_cast<unsigned>(n));
            if (a == b) continue;
            lines.push_back(line(static_cast<int>(lines.size()) + 1, a + 1, b + 1, 0.1, 100));
            edges.emplace_back(a, b);
        }
        // every bus needs a device
        std::vector<BusLoad> loads;
        for (int b = 2; b <= n; ++b) loads.push_back({b, 1.0});
        auto spec = small_case(buses, {gen(1, 1, 0.01, 10, 1000, 0)}, lines, loads);
        const auto net = build_network(spec);
        ScenarioSet sc = generate_scenarios(net, std::vector<int>{});
        for (std::size_t r = 0; r < lines.size(); ++r) {
            auto b = sc.susceptance[0];
            b[r] = 0.0;
            sc.outaged_line.push_back(static_cast<int>(r));
            sc.susceptance.push_back(b);
            sc.flow_limit.push_back(sc.flow_limit[0]);
        }
        CHECK(connectivity_check(net, sc, 0) == reachable_brute(n, edges));
        for (std::size_t r = 0; r < lines.size(); ++r) {
            auto e = edges;
            e.erase(e.begin() + static_cast<std::ptrdiff_t>(r));
            CHECK(connectivity_check(net, sc, static_cast<int>(r) + 1) == reachable_brute(n, e));
        }
    }
}

TEST_CASE("forecast_at") {
    const auto spec = load_case("case5.json");
    const auto t2 = forecast_at(spec, 2);
    std::vector<std::pair<int, double>> want{{2, 30}, {3, 40}, {4, 40}, {5, 65}};
    REQUIRE(t2.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(t2[i].bus == want[i].first);
        CHECK(t2[i].mw == want[i].second);
    }
    double total = 0.0;
    for (const auto& l : forecast_at(spec, 1)) total += l.mw;
    CHECK(total == doctest::Approx(165.0));
    CHECK(spec.total_load(1) == doctest::Approx(165.0));
    CHECK_THROWS_AS(forecast_at(spec, 0), ValidationError);
    CHECK_THROWS_AS(forecast_at(spec, 6), ValidationError);
}

TEST_CASE("radial lines are excluded from the non-islanding set") {
    const auto net = build_network(load_case("case14.json"));
    const auto ok = non_islanding_lines(net);
    CHECK(ok.size() == 19);
    const auto n2 = build_network(two_bus());
    CHECK(non_islanding_lines(n2).empty());
}

TEST_CASE("MATPOWER subset parser") {
    const char* text = R"(function mpc = t
mpc.baseMVA = 100;
mpc.bus = [
 1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 50 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 40 0 100 -100 1 100 1 200 0;
];
mpc.branch = [
 1 2 0.01 0.1 0 150 150 150 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 3 0.02 15 0;
];
)";
    const auto spec = parse_matpower(text);
    CHECK(spec.buses.size() == 2);
    CHECK(spec.generators[0].cost_a == doctest::Approx(0.02));
    CHECK(spec.lines[0].reactance == doctest::Approx(0.1));
    CHECK(spec.total_load(1) == doctest::Approx(50.0));
}
