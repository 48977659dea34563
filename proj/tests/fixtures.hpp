#pragma once

#include <memory>
#include <numeric>

#include "lascopf/network.hpp"
#include "lascopf/pmp.hpp"
#include "support.hpp"

namespace lascopf::test {

// Case, network, scenarios and one OPF subproblem kept at stable addresses.
struct OpfFixture {
    CaseSpec spec;
    DtnNetwork net;
    ScenarioSet scenarios;
    Subproblem sub;

    OpfFixture(CaseSpec s, int interval = 1, std::vector<int> contingencies = {}, bool ramp = true)
        : spec(std::move(s)), net(build_network(spec)), scenarios(generate_scenarios(net, contingencies)) {
        std::vector<int> labels(static_cast<std::size_t>(scenarios.size()));
        std::iota(labels.begin(), labels.end(), 0);
        sub = make_opf_subproblem(net, scenarios, labels, interval, load_vector(net, spec, interval), ramp);
    }
    OpfFixture(const OpfFixture&) = delete;
};

inline std::unique_ptr<OpfFixture> five_bus_base() { return std::make_unique<OpfFixture>(load_case("case5.json")); }

}  // namespace lascopf::test
