#include "lascopf/network.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

#include "lascopf/error.hpp"

namespace lascopf {

int DtnNetwork::net_of_bus(int bus) const {
    auto it = std::find(net_bus.begin(), net_bus.end(), bus);
    return it == net_bus.end() ? -1 : static_cast<int>(it - net_bus.begin());
}

int DtnNetwork::line_index(int line_id) const {
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].id == line_id) return static_cast<int>(i);
    return -1;
}

DtnNetwork build_network(const CaseSpec& spec) {
    DtnNetwork net;
    net.base_mva = spec.base_mva;
    net.net_bus = spec.buses;
    const double base = spec.base_mva;

    std::map<int, int> net_of;
    for (std::size_t i = 0; i < spec.buses.size(); ++i) net_of[spec.buses[i]] = static_cast<int>(i);
    auto lookup = [&](int bus, const std::string& who) {
        auto it = net_of.find(bus);
        if (it == net_of.end()) throw BuildError(who + " references unknown bus " + std::to_string(bus));
        return it->second;
    };

    auto add_device = [&](DeviceKind kind, int index, int id, std::initializer_list<int> nets) {
        Device d{kind, index, id, net.terminal_count(), static_cast<int>(nets.size())};
        int slot = 0;
        for (int n : nets) net.terminals.push_back({static_cast<int>(net.devices.size()), slot++, n});
        net.devices.push_back(d);
        return d.first_terminal;
    };

    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        const auto& g = spec.generators[i];
        GeneratorData d;
        d.id = g.id;
        d.net = lookup(g.bus, "generator " + std::to_string(g.id));
        d.cost_a = g.cost_a * base * base;
        d.cost_b = g.cost_b * base;
        d.cost_c = g.cost_c;
        d.p_min = g.p_min / base;
        d.p_max = g.p_max / base;
        d.ramp_up = g.ramp_up / base;
        d.ramp_down = g.ramp_down / base;
        d.sched = g.sched_mw / base;
        d.terminal = add_device(DeviceKind::generator, static_cast<int>(i), g.id, {d.net});
        net.generators.push_back(d);
    }
    for (std::size_t i = 0; i < spec.lines.size(); ++i) {
        const auto& l = spec.lines[i];
        LineData d;
        d.id = l.id;
        d.from_net = lookup(l.from_bus, "line " + std::to_string(l.id));
        d.to_net = lookup(l.to_bus, "line " + std::to_string(l.id));
        d.reactance = l.reactance;
        d.susceptance = 1.0 / l.reactance;
        d.limit = l.flow_limit / base;
        d.emergency_limit = l.emergency_limit / base;
        d.terminal = add_device(DeviceKind::line, static_cast<int>(i), l.id, {d.from_net, d.to_net});
        net.lines.push_back(d);
    }
    for (std::size_t i = 0; i < spec.forecast.size(); ++i) {
        const auto& s = spec.forecast[i];
        LoadData d;
        d.bus = s.bus;
        d.net = lookup(s.bus, "load");
        d.terminal = add_device(DeviceKind::load, static_cast<int>(i), s.bus, {d.net});
        net.loads.push_back(d);
    }

    net.net_terminals.assign(net.net_bus.size(), {});
    for (std::size_t t = 0; t < net.terminals.size(); ++t)
        net.net_terminals[static_cast<std::size_t>(net.terminals[t].net)].push_back(static_cast<int>(t));
    for (std::size_t n = 0; n < net.net_terminals.size(); ++n)
        if (net.net_terminals[n].empty())
            throw BuildError("bus " + std::to_string(net.net_bus[n]) + " has no attached device");

    net.neighbors.assign(net.net_bus.size(), {});
    for (const auto& l : net.lines) {
        auto& a = net.neighbors[static_cast<std::size_t>(l.from_net)];
        auto& b = net.neighbors[static_cast<std::size_t>(l.to_net)];
        if (std::find(a.begin(), a.end(), l.to_net) == a.end()) a.push_back(l.to_net);
        if (std::find(b.begin(), b.end(), l.from_net) == b.end()) b.push_back(l.from_net);
    }
    for (auto& nb : net.neighbors) std::sort(nb.begin(), nb.end());
    return net;
}

std::vector<double> load_vector(const DtnNetwork& net, const CaseSpec& spec, int interval) {
    const auto row = forecast_at(spec, interval);
    std::vector<double> out(net.loads.size(), 0.0);
    for (std::size_t i = 0; i < net.loads.size(); ++i)
        for (const auto& r : row)
            if (r.bus == net.loads[i].bus) out[i] = r.mw;
    return out;
}

namespace {

bool connected_without(const DtnNetwork& net, const std::vector<double>& susceptance) {
    const std::size_t n = net.net_bus.size();
    if (n <= 1) return true;
    std::vector<std::vector<int>> adj(n);
    for (std::size_t r = 0; r < net.lines.size(); ++r) {
        if (!(susceptance[r] > 0.0)) continue;
        adj[static_cast<std::size_t>(net.lines[r].from_net)].push_back(net.lines[r].to_net);
        adj[static_cast<std::size_t>(net.lines[r].to_net)].push_back(net.lines[r].from_net);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(v)])
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++count;
                stack.push_back(w);
            }
    }
    return count == n;
}

}  // namespace

ScenarioSet generate_scenarios(const DtnNetwork& net, std::span<const int> contingency_lines) {
    ScenarioSet set;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> base_b, base_l, emergency;
    for (const auto& l : net.lines) {
        base_b.push_back(l.susceptance);
        base_l.push_back(l.limit);
        emergency.push_back(l.emergency_limit);
    }
    set.outaged_line.push_back(-1);
    set.susceptance.push_back(base_b);
    set.flow_limit.push_back(base_l);
    for (int id : contingency_lines) {
        const int r = net.line_index(id);
        if (r < 0) throw BuildError("contingency references unknown line " + std::to_string(id));
        auto b = base_b;
        auto lim = emergency;
        b[static_cast<std::size_t>(r)] = 0.0;
        lim[static_cast<std::size_t>(r)] = inf;
        set.outaged_line.push_back(r);
        set.susceptance.push_back(std::move(b));
        set.flow_limit.push_back(std::move(lim));
        if (!connectivity_check(net, set, set.size() - 1))
            throw BuildError("outage of line " + std::to_string(id) + " islands the network");
    }
    return set;
}

bool connectivity_check(const DtnNetwork& net, const ScenarioSet& scenarios, int label) {
    return connected_without(net, scenarios.susceptance.at(static_cast<std::size_t>(label)));
}

std::vector<int> non_islanding_lines(const DtnNetwork& net) {
    std::vector<int> ids;
    std::vector<double> b;
    for (const auto& l : net.lines) b.push_back(l.susceptance);
    for (std::size_t r = 0; r < net.lines.size(); ++r) {
        const double keep = b[r];
        b[r] = 0.0;
        if (connected_without(net, b)) ids.push_back(net.lines[r].id);
        b[r] = keep;
    }
    return ids;
}

}  // namespace lascopf
