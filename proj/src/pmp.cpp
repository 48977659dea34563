#include "lascopf/pmp.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "lascopf/error.hpp"

namespace lascopf {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::unconverged: return "unconverged";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::diverged: return "diverged";
    }
    return "unknown";
}

Subproblem make_opf_subproblem(const DtnNetwork& net, const ScenarioSet& scenarios, std::span<const int> labels,
                               int interval, std::span<const double> load_mw, bool ramp_from_sched) {
    if (labels.empty()) throw BuildError("subproblem needs at least one scenario");
    if (load_mw.size() != net.loads.size()) throw BuildError("load vector does not match the network loads");
    Subproblem sub;
    sub.network = &net;
    sub.layers = static_cast<int>(labels.size());
    sub.layer_scenario.assign(labels.begin(), labels.end());
    sub.layer_interval.assign(labels.size(), interval);
    for (const auto& g : net.generators) {
        GenLocalProblem p;
        p.id = g.id;
        p.cost_a = g.cost_a;
        p.cost_b = g.cost_b;
        p.cost_c = g.cost_c;
        p.p_min = g.p_min;
        p.p_max = g.p_max;
        p.ramp_down = g.ramp_down;
        p.ramp_up = g.ramp_up;
        p.slots.push_back(GenSlot{1.0, true, 0.0, 0.0, 0.0});
        p.target_slots.assign(labels.size(), 0);
        if (ramp_from_sched) p.before = g.sched;
        sub.generators.push_back(std::move(p));
    }
    for (std::size_t r = 0; r < net.lines.size(); ++r) {
        LineLocalProblem p;
        p.id = net.lines[r].id;
        for (int c : labels) {
            if (c < 0 || c >= scenarios.size()) throw BuildError("unknown scenario label " + std::to_string(c));
            p.susceptance.push_back(scenarios.susceptance[static_cast<std::size_t>(c)][r]);
            p.limit.push_back(scenarios.flow_limit[static_cast<std::size_t>(c)][r]);
        }
        sub.lines.push_back(std::move(p));
    }
    for (double mw : load_mw) sub.load_mw.emplace_back(labels.size(), mw);
    return sub;
}

PlanState PlanState::zeros(const Subproblem& sub) {
    PlanState s;
    s.layers = sub.layers;
    s.terminals = sub.network->terminal_count();
    s.nets = sub.network->net_count();
    const auto nt = static_cast<std::size_t>(s.layers * s.terminals);
    const auto nn = static_cast<std::size_t>(s.layers * s.nets);
    s.p.assign(nt, 0.0);
    s.theta.assign(nt, 0.0);
    s.z.assign(nt, 0.0);
    s.xi.assign(nt, 0.0);
    s.p_avg.assign(nn, 0.0);
    s.theta_avg.assign(nn, 0.0);
    for (const auto& g : sub.generators) s.gen_slots.emplace_back(g.slots.size(), 0.0);
    return s;
}

DualState DualState::zeros(const Subproblem& sub, double rho) {
    DualState d;
    const auto nt = static_cast<std::size_t>(sub.layers * sub.network->terminal_count());
    d.u.assign(nt, 0.0);
    d.v.assign(nt, 0.0);
    d.rho = rho;
    return d;
}

DualState DualState::seeded(const Subproblem& sub, double rho) {
    DualState d = zeros(sub, rho);
    const DtnNetwork& net = *sub.network;
    const int T = net.terminal_count();
    constexpr double kTiny = 1e-9;
    std::vector<double> slots;
    for (int layer = 0; layer < sub.layers; ++layer) {
        double demand = 0.0;
        for (const auto& row : sub.load_mw) demand += row[static_cast<std::size_t>(layer)] / net.base_mva;
        auto supply = [&](double price) {
            double total = 0.0;
            for (const auto& prob : sub.generators) {
                GenLocalProblem local = prob;
                const auto k = static_cast<std::size_t>(prob.target_slots[static_cast<std::size_t>(layer)]);
                local.slots[k].linear -= price;
                std::vector<double> sum(local.slots.size(), 0.0);
                std::vector<int> count(local.slots.size(), 0);
                slots.assign(local.slots.size(), 0.0);
                solve_generator_slots(local, kTiny, sum, count, slots);
                total += slots[k];
            }
            return total;
        };
        double lo = -1e7, hi = 1e7;
        try {
            for (int i = 0; i < 200 && hi - lo > 1e-9 * (1.0 + std::abs(hi)); ++i) {
                const double mid = 0.5 * (lo + hi);
                (supply(mid) < demand ? lo : hi) = mid;
            }
        } catch (const InfeasibleError&) {
            continue;
        }
        const double price = 0.5 * (lo + hi);
        if (std::abs(price) >= 0.99e7) continue;
        for (int t = 0; t < T; ++t) d.u[static_cast<std::size_t>(layer * T + t)] = -price / rho;
    }
    return d;
}

namespace {

void check_shape(const Subproblem& sub, const PlanState& plan, const DualState& duals) {
    const auto nt = static_cast<std::size_t>(sub.layers * sub.network->terminal_count());
    if (plan.p.size() != nt || plan.z.size() != nt || duals.u.size() != nt || duals.v.size() != nt ||
        plan.gen_slots.size() != sub.generators.size())
        throw ValidationError("iteration state does not match the subproblem shape");
    for (std::size_t g = 0; g < sub.generators.size(); ++g)
        if (plan.gen_slots[g].size() != sub.generators[g].slots.size())
            throw ValidationError("generator slot state does not match the subproblem shape");
}

}  // namespace

void pmp_iterate(const Subproblem& sub, PlanState& plan, DualState& duals) {
    const DtnNetwork& net = *sub.network;
    const int T = net.terminal_count();
    const int L = sub.layers;
    const double rho = duals.rho;

    for (std::size_t g = 0; g < sub.generators.size(); ++g) {
        const auto& prob = sub.generators[g];
        const int t = net.generators[g].terminal;
        std::array<double, 8> sum{};
        std::array<int, 8> count{};
        const std::size_t k_count = prob.slots.size();
        if (k_count > sum.size()) throw ValidationError("generator " + std::to_string(prob.id) + ": too many slots");
        for (int l = 0; l < L; ++l) {
            const auto i = static_cast<std::size_t>(l * T + t);
            const auto k = static_cast<std::size_t>(prob.target_slots[static_cast<std::size_t>(l)]);
            sum[k] += plan.z[i] - duals.u[i];
            count[k] += 1;
        }
        auto& slots = plan.gen_slots[g];
        try {
            solve_generator_slots(prob, rho, std::span<const double>(sum.data(), k_count),
                                  std::span<const int>(count.data(), k_count), slots);
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(std::string("device prox: ") + e.what());
        }
        for (int l = 0; l < L; ++l) {
            const auto i = static_cast<std::size_t>(l * T + t);
            plan.p[i] = slots[static_cast<std::size_t>(prob.target_slots[static_cast<std::size_t>(l)])];
            plan.theta[i] = plan.xi[i] - duals.v[i];
        }
    }

    for (std::size_t r = 0; r < sub.lines.size(); ++r) {
        const auto& prob = sub.lines[r];
        const int t = net.lines[r].terminal;
        for (int l = 0; l < L; ++l) {
            const auto i1 = static_cast<std::size_t>(l * T + t);
            const auto i2 = i1 + 1;
            const auto res = project_line(prob.susceptance[static_cast<std::size_t>(l)],
                                          prob.limit[static_cast<std::size_t>(l)], plan.z[i1] - duals.u[i1],
                                          plan.z[i2] - duals.u[i2], plan.xi[i1] - duals.v[i1],
                                          plan.xi[i2] - duals.v[i2]);
            plan.p[i1] = res.p1;
            plan.p[i2] = res.p2;
            plan.theta[i1] = res.theta1;
            plan.theta[i2] = res.theta2;
        }
    }

    const double base = net.base_mva;
    for (std::size_t d = 0; d < net.loads.size(); ++d) {
        const int t = net.loads[d].terminal;
        for (int l = 0; l < L; ++l) {
            const auto i = static_cast<std::size_t>(l * T + t);
            plan.p[i] = -sub.load_mw[d][static_cast<std::size_t>(l)] / base;
            plan.theta[i] = plan.xi[i] - duals.v[i];
        }
    }

    net_update(net, plan, duals);
}

void net_update(const DtnNetwork& net, PlanState& plan, DualState& duals) {
    const int T = net.terminal_count();
    const int N = net.net_count();
    const int L = plan.layers;
    for (int l = 0; l < L; ++l) {
        const std::size_t off = static_cast<std::size_t>(l * T);
        for (int n = 0; n < N; ++n) {
            const auto& terms = net.net_terminals[static_cast<std::size_t>(n)];
            const double inv = 1.0 / static_cast<double>(terms.size());
            double ps = 0.0, ts = 0.0, us = 0.0, vs = 0.0;
            for (int t : terms) {
                const std::size_t i = off + static_cast<std::size_t>(t);
                ps += plan.p[i];
                ts += plan.theta[i];
                us += duals.u[i];
                vs += duals.v[i];
            }
            const double p_avg = ps * inv, t_avg = ts * inv, u_avg = us * inv, v_avg = vs * inv;
            const std::size_t ni = static_cast<std::size_t>(l * N + n);
            plan.p_avg[ni] = p_avg;
            plan.theta_avg[ni] = t_avg;
            const double xi = v_avg + t_avg;
            const double u_new = u_avg + p_avg;
            for (int t : terms) {
                const std::size_t i = off + static_cast<std::size_t>(t);
                plan.z[i] = duals.u[i] + plan.p[i] - u_avg - p_avg;
                plan.xi[i] = xi;
                duals.u[i] = u_new;
                duals.v[i] += plan.theta[i] - xi;
            }
        }
    }
}

namespace {

struct Norms {
    double r = 0.0;
    double s = 0.0;
};

Norms residual_norms(const DtnNetwork& net, const PlanState& prev, const PlanState& cur, double rho, double scale,
                     std::vector<double>* r_out, std::vector<double>* s_out) {
    const int T = net.terminal_count();
    const int N = net.net_count();
    const int L = cur.layers;
    double r2 = 0.0, s2 = 0.0;
    for (int l = 0; l < L; ++l) {
        for (int n = 0; n < N; ++n) {
            const double v = cur.p_avg[static_cast<std::size_t>(l * N + n)] * scale;
            r2 += v * v;
            if (r_out) r_out->push_back(v);
        }
    }
    for (int l = 0; l < L; ++l) {
        for (int t = 0; t < T; ++t) {
            const auto i = static_cast<std::size_t>(l * T + t);
            const auto ni = static_cast<std::size_t>(l * N + net.terminals[static_cast<std::size_t>(t)].net);
            const double v = cur.theta[i] - cur.theta_avg[ni];
            r2 += v * v;
            if (r_out) r_out->push_back(v);
        }
    }
    for (int l = 0; l < L; ++l) {
        for (int t = 0; t < T; ++t) {
            const auto i = static_cast<std::size_t>(l * T + t);
            const auto ni = static_cast<std::size_t>(l * N + net.terminals[static_cast<std::size_t>(t)].net);
            const double v = rho * scale * ((cur.p[i] - cur.p_avg[ni]) - (prev.p[i] - prev.p_avg[ni]));
            s2 += v * v;
            if (s_out) s_out->push_back(v);
        }
    }
    for (int l = 0; l < L; ++l) {
        for (int n = 0; n < N; ++n) {
            const auto ni = static_cast<std::size_t>(l * N + n);
            const double v = rho * (cur.theta_avg[ni] - prev.theta_avg[ni]);
            s2 += v * v;
            if (s_out) s_out->push_back(v);
        }
    }
    return {std::sqrt(r2), std::sqrt(s2)};
}

}  // namespace

Residuals compute_residuals(const DtnNetwork& net, const PlanState& prev, const PlanState& cur, double rho,
                            double power_scale) {
    if (prev.p.size() != cur.p.size() || prev.p_avg.size() != cur.p_avg.size() || prev.layers != cur.layers ||
        prev.terminals != cur.terminals)
        throw ValidationError("residuals: state shapes differ");
    Residuals res;
    res.rho = rho;
    const auto n = residual_norms(net, prev, cur, rho, power_scale, &res.r, &res.s);
    res.r_norm = n.r;
    res.s_norm = n.s;
    return res;
}

StopThresholds stop_thresholds(const PmpParams& params, int terminals, int scenario_count) {
    if (params.eps_abs) {
        const double eps = *params.eps_abs * std::sqrt(static_cast<double>(terminals) * scenario_count);
        return {eps, eps};
    }
    return {params.eps_pri, params.eps_dual};
}

bool check_stop(const Residuals& res, const StopThresholds& thresholds) {
    if (std::isnan(res.r_norm) || std::isnan(res.s_norm))
        throw DivergenceError("residual norm is NaN");
    return res.r_norm <= thresholds.pri && res.s_norm <= thresholds.dual;
}

double adapt_rho(double rho, const Residuals& res, const Residuals* prev_res, int iter, const PmpParams& params) {
    if (!params.adapt_rho || iter > params.rho_freeze_iter) return rho;
    if (!(res.r_norm > 0.0) || !(res.s_norm > 0.0) || !std::isfinite(res.r_norm) || !std::isfinite(res.s_norm))
        return rho;
    const double e = std::log(res.s_norm / (rho * res.r_norm));
    double e_prev = e;
    if (prev_res && prev_res->r_norm > 0.0 && prev_res->s_norm > 0.0 && std::isfinite(prev_res->r_norm) &&
        std::isfinite(prev_res->s_norm))
        e_prev = std::log(prev_res->s_norm / (prev_res->rho * prev_res->r_norm));
    const double next = rho * std::exp(params.k_p * e + params.k_d * (e - e_prev));
    return std::clamp(next, params.rho_min, params.rho_max);
}

void rescale_duals(DualState& duals, double new_rho) {
    if (new_rho == duals.rho) return;
    const double f = duals.rho / new_rho;
    for (auto& x : duals.u) x *= f;
    for (auto& x : duals.v) x *= f;
    duals.rho = new_rho;
}

double subproblem_objective(const Subproblem& sub, const PlanState& plan) {
    double f = 0.0;
    for (std::size_t g = 0; g < sub.generators.size(); ++g) {
        const auto& prob = sub.generators[g];
        for (std::size_t k = 0; k < prob.slots.size(); ++k) {
            const double x = plan.gen_slots[g][k];
            f += prob.slots[k].cost_weight * (prob.cost_a * x * x + prob.cost_b * x + prob.cost_c);
        }
    }
    return f;
}

double auto_rho(const Subproblem& sub, double fallback) {
    double curvature = 0.0;
    for (const auto& prob : sub.generators)
        for (const auto& slot : prob.slots)
            curvature = std::max(curvature, 2.0 * slot.cost_weight * prob.cost_a + slot.prox_weight);
    return curvature > 0.0 ? 0.2 * curvature : fallback;
}

PmpResult run_pmp(const Subproblem& sub, const std::optional<std::pair<PlanState, DualState>>& warm,
                  const PmpParams& params, const PmpSink& sink) {
    const auto start = std::chrono::steady_clock::now();
    PmpResult out;
    if (warm) {
        out.plan = warm->first;
        out.duals = warm->second;
        if (params.auto_rho && out.duals.rho > 0.0) {
            const double rho = auto_rho(sub, params.rho0);
            if (rho != out.duals.rho) rescale_duals(out.duals, rho);
        }
    } else {
        out.plan = PlanState::zeros(sub);
        const double rho = params.auto_rho ? auto_rho(sub, params.rho0) : params.rho0;
        out.duals = params.seed_prices ? DualState::seeded(sub, rho) : DualState::zeros(sub, rho);
    }
    check_shape(sub, out.plan, out.duals);

    const DtnNetwork& net = *sub.network;
    const double scale = net.base_mva;
    const auto thresholds = stop_thresholds(params, net.terminal_count(), sub.layers);
    PlanState prev;
    Residuals res, prev_res;
    bool have_prev = false;
    std::vector<double> r_history;
    r_history.reserve(static_cast<std::size_t>(std::min(params.max_iter, 100000)));
    auto& rep = out.report;
    rep.status = SolveStatus::unconverged;

    for (int it = 1; it <= params.max_iter; ++it) {
        prev = out.plan;
        try {
            pmp_iterate(sub, out.plan, out.duals);
        } catch (const InfeasibleError& e) {
            rep.status = SolveStatus::infeasible;
            rep.message = e.what();
            rep.iterations = it - 1;
            break;
        }
        const auto n = residual_norms(net, prev, out.plan, out.duals.rho, scale, nullptr, nullptr);
        res.r_norm = n.r;
        res.s_norm = n.s;
        res.rho = out.duals.rho;
        rep.iterations = it;
        rep.r_norm = res.r_norm;
        rep.s_norm = res.s_norm;
        rep.rho = res.rho;
        r_history.push_back(res.r_norm);

        if (params.record_trace || sink) {
            PmpTraceRecord rec{it, res.r_norm, res.s_norm, res.rho, subproblem_objective(sub, out.plan)};
            if (params.record_trace) rep.trace.push_back(rec);
            if (sink) sink(rec);
        }

        bool stop = false;
        try {
            stop = check_stop(res, thresholds);
        } catch (const DivergenceError& e) {
            rep.status = SolveStatus::diverged;
            rep.message = e.what();
            break;
        }
        if (!std::isfinite(res.r_norm) || !std::isfinite(res.s_norm) || res.r_norm > params.divergence_limit) {
            rep.status = SolveStatus::diverged;
            rep.message = "primal residual exceeded the divergence guard";
            break;
        }
        if (stop) {
            rep.status = SolveStatus::converged;
            break;
        }
        const double next = adapt_rho(out.duals.rho, res, have_prev ? &prev_res : nullptr, it, params);
        rescale_duals(out.duals, next);
        prev_res = res;
        have_prev = true;
    }

    if (rep.status == SolveStatus::unconverged && r_history.size() >= 40) {
        // A primal residual that stops shrinking signals an empty feasible set.
        const std::size_t cut = r_history.size() * 3 / 4;
        const double early = *std::min_element(r_history.begin(), r_history.begin() + static_cast<std::ptrdiff_t>(cut));
        const double late = *std::min_element(r_history.begin() + static_cast<std::ptrdiff_t>(cut), r_history.end());
        if (late > thresholds.pri && late >= 0.98 * early) {
            rep.status = SolveStatus::infeasible;
            rep.message = "primal residual stalled at " + std::to_string(late) + " above tolerance";
        } else {
            rep.message = "iteration cap reached";
        }
    }
    rep.objective = subproblem_objective(sub, out.plan);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<double> layer_dispatch_mw(const Subproblem& sub, const PlanState& plan, int layer) {
    std::vector<double> out;
    const double base = sub.network->base_mva;
    for (std::size_t g = 0; g < sub.generators.size(); ++g) {
        const auto k = static_cast<std::size_t>(sub.generators[g].target_slots[static_cast<std::size_t>(layer)]);
        out.push_back(plan.gen_slots[g][k] * base);
    }
    return out;
}

std::vector<double> recover_lmp(const Subproblem& sub, const DualState& duals) {
    const DtnNetwork& net = *sub.network;
    const int T = net.terminal_count();
    const int N = net.net_count();
    std::vector<double> out(static_cast<std::size_t>(sub.layers * N), 0.0);
    for (int l = 0; l < sub.layers; ++l)
        for (int n = 0; n < N; ++n) {
            const int t = net.net_terminals[static_cast<std::size_t>(n)].front();
            out[static_cast<std::size_t>(l * N + n)] = -duals.rho * duals.u[static_cast<std::size_t>(l * T + t)] / net.base_mva;
        }
    return out;
}

std::vector<double> net_angles(const PlanState& plan) {
    std::vector<double> out(plan.theta_avg.size());
    for (int l = 0; l < plan.layers; ++l) {
        const double ref = plan.theta_avg[static_cast<std::size_t>(l * plan.nets)];
        for (int n = 0; n < plan.nets; ++n) {
            const auto i = static_cast<std::size_t>(l * plan.nets + n);
            out[i] = plan.theta_avg[i] - ref;
        }
    }
    return out;
}

}  // namespace lascopf
