#include "lascopf/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "lascopf/error.hpp"
#include "lascopf/log.hpp"

namespace lascopf {

double alpha_at(const AlphaSchedule& schedule, int mu) {
    for (const auto& [last, alpha] : schedule.steps)
        if (mu <= last) return alpha;
    return schedule.tail;
}

AlphaSchedule default_scenario_schedule() { return {{{5, 5.0}, {10, 3.0}, {15, 2.5}, {20, 1.25}}, 0.5}; }
AlphaSchedule default_interval_schedule() { return {{{5, 10.0}, {10, 5.0}, {15, 2.5}, {20, 1.25}}, 0.5}; }

void validate_schedule(const AlphaSchedule& schedule) {
    int last = 0;
    for (const auto& [threshold, alpha] : schedule.steps) {
        if (threshold <= last) throw ValidationError("alpha schedule thresholds must be increasing and positive");
        if (!(alpha > 0.0)) throw ValidationError("alpha schedule values must be positive");
        last = threshold;
    }
    if (!(schedule.tail > 0.0)) throw ValidationError("alpha schedule tail must be positive");
}

AlphaSchedule parse_alpha_schedule(const std::string& text) {
    AlphaSchedule out;
    std::stringstream ss(text);
    std::string item;
    std::vector<std::string> items;
    while (std::getline(ss, item, ',')) items.push_back(item);
    if (items.empty()) throw UsageError("empty alpha schedule");
    try {
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto at = items[i].find('@');
            if (at == std::string::npos) {
                if (i + 1 != items.size()) throw UsageError("alpha schedule: only the last entry may omit '@'");
                out.tail = std::stod(items[i]);
            } else {
                out.steps.emplace_back(std::stoi(items[i].substr(at + 1)), std::stod(items[i].substr(0, at)));
                if (i + 1 == items.size()) out.tail = out.steps.back().second;
            }
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("alpha schedule: cannot parse '" + text + "'");
    }
    try {
        validate_schedule(out);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    return out;
}

AppParams default_scenario_app() { return {default_scenario_schedule(), 200.0, 100.0, 0.7, 0.02, 5000}; }
AppParams default_interval_app() { return {default_interval_schedule(), 200.0, 100.0, 0.6, 0.02, 100}; }

BeliefSet BeliefSet::replicate(int horizon, std::span<const double> dispatch_mw) {
    BeliefSet b;
    b.horizon = horizon;
    const std::vector<double> row(dispatch_mw.begin(), dispatch_mw.end());
    for (int t = 1; t <= horizon; ++t) {
        b.own.push_back(row);
        b.prev.push_back(t >= 2 ? row : std::vector<double>{});
        b.next.push_back(t < horizon ? row : std::vector<double>{});
    }
    return b;
}

LambdaState LambdaState::zeros(int horizon, int generators) {
    LambdaState l;
    const int slots = std::max(0, 2 * horizon - 2);
    l.slots.assign(static_cast<std::size_t>(slots), std::vector<double>(static_cast<std::size_t>(generators), 0.0));
    return l;
}

std::vector<std::vector<double>> interval_disagreement(const BeliefSet& b) {
    std::vector<std::vector<double>> out;
    for (int p = 0; p + 1 < b.horizon; ++p) {
        const auto pi = static_cast<std::size_t>(p);
        const auto& own_lo = b.own[pi];
        const auto& prev_hi = b.prev[pi + 1];
        const auto& next_lo = b.next[pi];
        const auto& own_hi = b.own[pi + 1];
        if (prev_hi.size() != own_lo.size() || next_lo.size() != own_lo.size() || own_hi.size() != own_lo.size())
            throw ValidationError("belief set: missing neighbour belief for intervals " + std::to_string(p + 1) +
                                  " and " + std::to_string(p + 2));
        std::vector<double> e1(own_lo.size()), e2(own_lo.size());
        for (std::size_t g = 0; g < own_lo.size(); ++g) {
            e1[g] = own_lo[g] - prev_hi[g];
            e2[g] = next_lo[g] - own_hi[g];
        }
        out.push_back(std::move(e1));
        out.push_back(std::move(e2));
    }
    return out;
}

double interval_residual(const BeliefSet& beliefs) {
    double s = 0.0;
    for (const auto& row : interval_disagreement(beliefs))
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

LambdaState update_interval_duals(const LambdaState& lambda, const BeliefSet& beliefs_new, double alpha) {
    const auto e = interval_disagreement(beliefs_new);
    if (e.size() != lambda.slots.size()) throw ValidationError("multiplier slots do not match the belief horizon");
    LambdaState out = lambda;
    for (std::size_t k = 0; k < e.size(); ++k)
        for (std::size_t g = 0; g < e[k].size(); ++g) out.slots[k][g] += alpha * e[k][g];
    return out;
}

IntervalSubproblem build_interval_subproblem(int interval, const BeliefSet& beliefs, const LambdaState& lambda,
                                             const AppParams& params, const DtnNetwork& net,
                                             const ScenarioSet& scenarios, std::span<const int> labels,
                                             const CaseSpec& spec) {
    const int horizon = spec.horizon;
    if (interval < 1 || interval > horizon) throw ValidationError("interval outside the horizon");
    if (beliefs.horizon != horizon) throw ValidationError("belief horizon does not match the case");
    const auto G = net.generators.size();
    const auto t = static_cast<std::size_t>(interval - 1);
    const bool coupled = horizon >= 2 && params.beta > 0.0;

    IntervalSubproblem ip;
    ip.network = &net;
    ip.scenarios = &scenarios;
    ip.labels.assign(labels.begin(), labels.end());
    ip.interval = interval;
    ip.horizon = horizon;
    ip.load_mw = load_vector(net, spec, interval);
    ip.beta = coupled ? params.beta : 0.0;
    ip.own_belief = beliefs.own.at(t);
    if (ip.own_belief.size() != G) throw ValidationError("belief set: own belief has the wrong size");

    std::vector<std::vector<double>> e;
    if (horizon >= 2) e = interval_disagreement(beliefs);
    auto term = [&](std::size_t slot, std::size_t g) {
        return params.gamma * e[slot][g] + lambda.slots.at(slot)[g];
    };

    for (std::size_t g = 0; g < G; ++g) {
        IntervalGenTerms gt;
        gt.own_center = beliefs.own[t][g];
        if (interval == 1) gt.before = spec.generators[g].sched_mw;
        if (horizon >= 2) {
            if (interval < horizon) gt.own_linear += term(2 * t, g);
            if (interval > 1) gt.own_linear -= term(2 * (t - 1) + 1, g);
        }
        if (coupled) {
            if (interval > 1) {
                if (beliefs.prev[t].size() != G) throw ValidationError("belief set: missing previous-interval belief");
                gt.has_prev = true;
                gt.prev_center = beliefs.prev[t][g];
                gt.prev_linear = -term(2 * (t - 1), g);
            }
            if (interval < horizon) {
                if (beliefs.next[t].size() != G) throw ValidationError("belief set: missing next-interval belief");
                gt.has_next = true;
                gt.next_center = beliefs.next[t][g];
                gt.next_linear = term(2 * t + 1, g);
            }
            if (interval == horizon) gt.after = beliefs.own[t][g];
        }
        ip.gens.push_back(gt);
    }
    return ip;
}

Subproblem make_scenario_opf(const IntervalSubproblem& ip, int index, double cost_weight,
                             std::span<const ScenarioGenTerms> terms) {
    const DtnNetwork& net = *ip.network;
    const int label = ip.labels.at(static_cast<std::size_t>(index));
    const int one[1] = {label};
    Subproblem sub = make_opf_subproblem(net, *ip.scenarios, one, ip.interval, ip.load_mw, false);
    const double base = net.base_mva;
    const double base2 = base * base;
    for (std::size_t g = 0; g < sub.generators.size(); ++g) {
        auto& prob = sub.generators[g];
        const auto& gt = ip.gens[g];
        const ScenarioGenTerms st = g < terms.size() ? terms[g] : ScenarioGenTerms{};
        GenSlot own{cost_weight, true, 0.0, 0.0, 0.0};

        double weight = st.prox_weight;
        double weighted_center = st.prox_weight * st.prox_center;
        double linear = st.linear;
        if (gt.before) prob.before = *gt.before / base;
        weight += cost_weight * ip.beta;
        weighted_center += cost_weight * ip.beta * gt.own_center;
        linear += cost_weight * gt.own_linear;
        if (index == 0 && gt.after) prob.after = *gt.after / base;
        own.prox_weight = weight * base2;
        own.prox_center = weight > 0.0 ? weighted_center / weight / base : 0.0;
        own.linear = linear * base;

        // Every scenario copy carries the own-slot terms, so the base-only neighbour slots carry them once per copy.
        const double copies = cost_weight * static_cast<double>(ip.labels.size());
        prob.slots.clear();
        int own_index = 0;
        if (index == 0 && gt.has_prev) {
            prob.slots.push_back({0.0, true, copies * ip.beta * base2, gt.prev_center / base, copies * gt.prev_linear * base});
            own_index = 1;
        }
        prob.slots.push_back(own);
        if (index == 0 && gt.has_next)
            prob.slots.push_back({0.0, true, copies * ip.beta * base2, gt.next_center / base, copies * gt.next_linear * base});
        prob.target_slots.assign(1, own_index);
    }
    return sub;
}

namespace {

using Clock = std::chrono::steady_clock;

int own_slot(const Subproblem& sub, std::size_t g) { return sub.generators[g].target_slots[0]; }

ScenarioOutcome make_outcome(const IntervalSubproblem& ip, int index, const Subproblem& sub, const PmpResult& res) {
    const DtnNetwork& net = *ip.network;
    ScenarioOutcome o;
    o.label = ip.labels[static_cast<std::size_t>(index)];
    const int outaged = ip.scenarios->outaged_line[static_cast<std::size_t>(o.label)];
    o.outaged_line_id = outaged >= 0 ? net.lines[static_cast<std::size_t>(outaged)].id : -1;
    o.status = res.report.status;
    o.pmp_iterations = res.report.iterations;
    o.r_norm = res.report.r_norm;
    o.s_norm = res.report.s_norm;
    o.dispatch_mw = layer_dispatch_mw(sub, res.plan, 0);
    o.angles = net_angles(res.plan);
    o.lmp = recover_lmp(sub, res.duals);
    const double base = net.base_mva;
    for (std::size_t r = 0; r < net.lines.size(); ++r) {
        const double b = sub.lines[r].susceptance[0];
        const auto& l = net.lines[r];
        const double d = res.plan.theta_avg[static_cast<std::size_t>(l.from_net)] -
                         res.plan.theta_avg[static_cast<std::size_t>(l.to_net)];
        o.flows_mw.push_back(b * d * base);
        o.limits_mw.push_back(b == 0.0 ? INFINITY : sub.lines[r].limit[0] * base);
    }
    for (double v : res.plan.p_avg) o.max_imbalance_mw = std::max(o.max_imbalance_mw, std::abs(v) * base);
    return o;
}

std::string scenario_name(const IntervalSubproblem& ip, int index) {
    const int label = ip.labels[static_cast<std::size_t>(index)];
    const int outaged = ip.scenarios->outaged_line[static_cast<std::size_t>(label)];
    std::string name = "scenario " + std::to_string(label);
    if (outaged >= 0) name += " (outage of line " + std::to_string(ip.network->lines[static_cast<std::size_t>(outaged)].id) + ")";
    name += ", interval " + std::to_string(ip.interval);
    return name;
}

void push_pmp_rows(std::vector<TraceRow>& rows, const PmpReport& rep, int outer, int inner, int interval,
                   int scenario) {
    for (const auto& r : rep.trace)
        rows.push_back({"pmp", outer, inner, interval, scenario, r.iter, r.r_norm, r.s_norm, r.rho, r.objective});
}

double generator_cost(const CaseSpec& spec, std::size_t g, double p) {
    const auto& gen = spec.generators[g];
    return gen.cost_a * p * p + gen.cost_b * p + gen.cost_c;
}

}  // namespace

ScopfSolution scenario_consensus_solve(const IntervalSubproblem& ip, const ScopfOptions& options,
                                       const ScopfWarm* warm, WorkerPool* pool) {
    const int L = static_cast<int>(ip.labels.size());
    const auto G = ip.network->generators.size();
    if (L < 1) throw ValidationError("scenario consensus needs at least one scenario");
    PmpParams pp = options.pmp;
    pp.record_trace = options.record_trace && options.trace_pmp;

    ScopfSolution sol;
    sol.warm.pmp.resize(static_cast<std::size_t>(L));
    if (warm && warm->pmp.size() == static_cast<std::size_t>(L)) sol.warm.pmp = warm->pmp;

    std::vector<Subproblem> subs(static_cast<std::size_t>(L));
    std::vector<PmpResult> results(static_cast<std::size_t>(L));
    std::vector<std::string> errors(static_cast<std::size_t>(L));

    auto run_one = [&](int c, const std::vector<ScenarioGenTerms>& terms, double weight) {
        const auto ci = static_cast<std::size_t>(c);
        subs[ci] = make_scenario_opf(ip, c, weight, terms);
        if (auto& w = sol.warm.pmp[ci]; w && w->first.gen_slots.size() == subs[ci].generators.size()) {
            for (std::size_t g = 0; g < subs[ci].generators.size(); ++g) {
                auto& slots = w->first.gen_slots[g];
                const auto want = subs[ci].generators[g].slots.size();
                if (slots.size() == want || slots.empty()) continue;
                const double own = slots[slots.size() == 3 ? 1 : 0];
                slots.assign(want, own);
            }
        }
        try {
            results[ci] = run_pmp(subs[ci], sol.warm.pmp[ci], pp);
        } catch (const ValidationError&) {
            results[ci] = run_pmp(subs[ci], std::nullopt, pp);
        }
    };

    auto finish = [&](int inner) {
        const auto& base_sub = subs[0];
        const auto& base_plan = results[0].plan;
        sol.own_mw.assign(G, 0.0);
        sol.prev_mw.clear();
        sol.next_mw.clear();
        const double base = ip.network->base_mva;
        for (std::size_t g = 0; g < G; ++g) {
            const auto k = static_cast<std::size_t>(own_slot(base_sub, g));
            sol.own_mw[g] = base_plan.gen_slots[g][k] * base;
            if (ip.gens[g].has_prev) sol.prev_mw.push_back(base_plan.gen_slots[g][k - 1] * base);
            if (ip.gens[g].has_next) sol.next_mw.push_back(base_plan.gen_slots[g][k + 1] * base);
        }
        sol.scenarios.clear();
        for (int c = 0; c < L; ++c) sol.scenarios.push_back(make_outcome(ip, c, subs[static_cast<std::size_t>(c)], results[static_cast<std::size_t>(c)]));
        sol.inner_iterations = inner;
        sol.objective = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            const auto& d = ip.network->generators[g];
            const double p = sol.own_mw[g] / base;
            sol.objective += d.cost_a * p * p + d.cost_b * p + d.cost_c;
        }
    };

    auto check_runs = [&]() -> bool {
        bool ok = true;
        bool capped = false;
        for (int c = 0; c < L; ++c) {
            const auto& rep = results[static_cast<std::size_t>(c)].report;
            sol.pmp_iterations += rep.iterations;
            if (rep.status == SolveStatus::infeasible || rep.status == SolveStatus::diverged) {
                if (ok) {
                    sol.status = SolveStatus::infeasible;
                    sol.message = scenario_name(ip, c) + ": " + to_string(rep.status) + ": " + rep.message;
                }
                ok = false;
            } else if (rep.status == SolveStatus::unconverged) {
                capped = true;
            }
        }
        if (ok && capped) sol.message = "a scenario OPF reached the iteration cap";
        return ok;
    };

    auto account_time = [&]() {
        double mx = 0.0;
        for (const auto& r : results) {
            sol.seq_seconds += r.report.wall_seconds;
            mx = std::max(mx, r.report.wall_seconds);
        }
        sol.crit_seconds += mx;
    };

    auto all_pmp_converged = [&]() {
        return std::all_of(results.begin(), results.end(), [](const PmpResult& r) { return r.report.converged(); });
    };

    if (L == 1) {
        run_one(0, {}, 1.0);
        account_time();
        if (pp.record_trace) push_pmp_rows(sol.trace, results[0].report, options.outer, 0, ip.interval, ip.labels[0]);
        const bool ok = check_runs();
        finish(0);
        sol.warm.pmp[0] = std::make_pair(results[0].plan, results[0].duals);
        if (ok) sol.status = all_pmp_converged() ? SolveStatus::converged : SolveStatus::unconverged;
        return sol;
    }

    const double weight = 1.0;
    const double bscale = static_cast<double>(L - 1);
    std::vector<std::vector<double>> belief(static_cast<std::size_t>(L), ip.own_belief);
    std::vector<std::vector<double>> lam(static_cast<std::size_t>(L), std::vector<double>(G, 0.0));
    if (warm && warm->lambdas.size() == static_cast<std::size_t>(L)) lam = warm->lambdas;
    if (warm && warm->beliefs.size() == static_cast<std::size_t>(L)) belief = warm->beliefs;
    bool ok = true;

    const AppParams& app = options.app;
    int nu = 0;
    int done = 0;
    for (nu = 1; ok && nu <= app.max_outer; ++nu) {
        std::vector<std::vector<ScenarioGenTerms>> terms(static_cast<std::size_t>(L), std::vector<ScenarioGenTerms>(G));
        for (std::size_t g = 0; g < G; ++g) {
            double base_linear = 0.0;
            for (int c = 1; c < L; ++c) {
                const auto ci = static_cast<std::size_t>(c);
                const double e = belief[0][g] - belief[ci][g];
                const double push = app.gamma * e + lam[ci][g];
                base_linear += push;
                terms[ci][g] = {app.beta, belief[ci][g], -push};
            }
            terms[0][g] = {app.beta * bscale, belief[0][g], base_linear};
        }

        parallel_for(pool, L, [&](int c) { run_one(c, terms[static_cast<std::size_t>(c)], weight); });
        account_time();
        if (pp.record_trace)
            for (int c = 0; c < L; ++c)
                push_pmp_rows(sol.trace, results[static_cast<std::size_t>(c)].report, options.outer, nu, ip.interval,
                              ip.labels[static_cast<std::size_t>(c)]);
        for (int c = 0; c < L; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            sol.warm.pmp[ci] = std::make_pair(results[ci].plan, results[ci].duals);
        }
        if (!check_runs()) {
            ok = false;
            break;
        }

        double d2 = 0.0;
        for (int c = 0; c < L; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            const auto& sub = subs[ci];
            for (std::size_t g = 0; g < G; ++g) {
                const double x = results[ci].plan.gen_slots[g][static_cast<std::size_t>(own_slot(sub, g))] * ip.network->base_mva;
                d2 += (x - belief[ci][g]) * (x - belief[ci][g]);
                belief[ci][g] = x;
            }
        }
        const double change = std::sqrt(d2);
        const double alpha = alpha_at(app.alpha, nu);
        double s2 = 0.0;
        for (int c = 1; c < L; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            for (std::size_t g = 0; g < G; ++g) {
                const double e = belief[0][g] - belief[ci][g];
                s2 += e * e;
                lam[ci][g] += alpha * e;
            }
        }
        sol.residual = std::sqrt(s2);
        sol.change = change;
        sol.residual_trace.push_back(sol.residual);
        done = nu;
        if (options.record_trace)
            sol.trace.push_back({"scopf", options.outer, nu, ip.interval, -1, nu, sol.residual, change, alpha, sol.residual});
        log::debug("interval ", ip.interval, " scenario consensus ", nu, ": residual ", sol.residual, " MW, change ",
                   change, " MW");
        if (sol.residual <= app.tolerance && change <= app.step_tolerance) break;
    }
    finish(done);
    sol.warm.beliefs = belief;
    sol.warm.lambdas = lam;
    if (ok) {
        const bool consensus = done > 0 && sol.residual <= app.tolerance && sol.change <= app.step_tolerance;
        sol.status = consensus && all_pmp_converged() ? SolveStatus::converged : SolveStatus::unconverged;
        if (!consensus) sol.message = "scenario consensus not reached in " + std::to_string(app.max_outer) + " iterations";
    }
    return sol;
}

double dispatch_cost(const CaseSpec& spec, const std::vector<std::vector<double>>& dispatch_mw) {
    double total = 0.0;
    for (const auto& row : dispatch_mw)
        for (std::size_t g = 0; g < row.size(); ++g) total += generator_cost(spec, g, row[g]);
    return total;
}

LascopfResult lascopf_solve(const CaseSpec& spec, const DtnNetwork& net, const ScenarioSet& scenarios,
                            const LascopfParams& params, const LascopfWarm* warm, WorkerPool* pool,
                            const TraceSink& sink) {
    const int horizon = spec.horizon;
    const int G = static_cast<int>(net.generators.size());
    std::vector<int> labels;
    for (int c = 0; c < scenarios.size(); ++c) labels.push_back(c);
    std::vector<double> sched;
    for (const auto& g : spec.generators) sched.push_back(g.sched_mw);

    LascopfResult res;
    res.beliefs = BeliefSet::replicate(horizon, sched);
    res.lambda = LambdaState::zeros(horizon, G);
    std::vector<ScopfWarm> scwarm(static_cast<std::size_t>(horizon));
    if (warm) {
        if (warm->beliefs.horizon == horizon) res.beliefs = warm->beliefs;
        if (warm->lambda.slots.size() == res.lambda.slots.size()) res.lambda = warm->lambda;
        if (warm->intervals.size() == scwarm.size()) scwarm = warm->intervals;
    }

    ScopfOptions opts;
    opts.app = params.scenario;
    opts.pmp = params.pmp;
    opts.record_trace = params.record_trace && static_cast<bool>(sink);
    opts.trace_pmp = params.trace_pmp;

    auto flush = [&](std::vector<ScopfSolution>& sols) {
        if (!opts.record_trace) return;
        for (auto& s : sols) {
            for (const auto& row : s.trace) sink(row);
            s.trace.clear();
            s.trace.shrink_to_fit();
        }
    };

    const int max_outer = horizon == 1 ? 1 : params.interval.max_outer;
    std::vector<ScopfSolution> sols(static_cast<std::size_t>(horizon));
    bool failed = false;

    auto solve_round = [&](int outer, const AppParams& ap, const LambdaState& lambda) {
        opts.outer = outer;
        parallel_for(pool, horizon, [&](int i) {
            const auto ti = static_cast<std::size_t>(i);
            const auto ip = build_interval_subproblem(i + 1, res.beliefs, lambda, ap, net, scenarios, labels, spec);
            sols[ti] = scenario_consensus_solve(ip, opts, &scwarm[ti], pool);
        });
        double mx = 0.0;
        for (std::size_t t = 0; t < sols.size(); ++t) {
            res.seq_seconds += sols[t].seq_seconds;
            mx = std::max(mx, sols[t].crit_seconds);
            res.inner_iterations += sols[t].inner_iterations;
            res.pmp_iterations += sols[t].pmp_iterations;
            scwarm[t] = sols[t].warm;
        }
        res.crit_seconds += mx;
        flush(sols);
        for (const auto& s : sols)
            if (s.status == SolveStatus::infeasible) {
                res.status = SolveStatus::infeasible;
                res.message = s.message;
                failed = true;
                return;
            }
    };

    auto gather = [&]() {
        BeliefSet next = res.beliefs;
        const std::size_t H = sols.size();
        for (std::size_t t = 0; t < H; ++t) next.own[t] = sols[t].own_mw;
        for (std::size_t t = 0; t < H; ++t) {
            if (t >= 1) next.prev[t] = sols[t].prev_mw.empty() ? next.own[t - 1] : sols[t].prev_mw;
            if (t + 1 < H) next.next[t] = sols[t].next_mw.empty() ? next.own[t + 1] : sols[t].next_mw;
        }
        return next;
    };

    if (horizon >= 2 && !(warm && warm->beliefs.horizon == horizon)) {
        // Cold start: independent per-interval solves seed the beliefs.
        AppParams decoupled = params.interval;
        decoupled.beta = 0.0;
        decoupled.gamma = 0.0;
        solve_round(0, decoupled, LambdaState::zeros(horizon, G));
        if (!failed) res.beliefs = gather();
    }

    int mu = 0;
    int done = 0;
    double change = 0.0;
    for (mu = 1; mu <= max_outer && !failed; ++mu) {
        solve_round(horizon == 1 ? 0 : mu, params.interval, res.lambda);
        if (failed) break;
        BeliefSet next = gather();
        if (horizon == 1) {
            res.beliefs = next;
            break;
        }
        const double residual = interval_residual(next);
        if (log::enabled(log::Level::debug)) {
            const auto e = interval_disagreement(next);
            for (std::size_t k = 0; k < e.size(); ++k) {
                std::string row;
                for (double v : e[k]) row += " " + std::to_string(v);
                log::debug("outer ", mu, " slot ", k, ":", row);
            }
            for (std::size_t t = 0; t < sols.size(); ++t)
                log::debug("outer ", mu, " interval ", t + 1, " inner ", sols[t].inner_iterations, " residual ",
                           sols[t].residual, " status ", to_string(sols[t].status));
        }
        double d2 = 0.0;
        for (std::size_t t = 0; t < next.own.size(); ++t)
            for (std::size_t g = 0; g < next.own[t].size(); ++g) {
                const double d = next.own[t][g] - res.beliefs.own[t][g];
                d2 += d * d;
            }
        change = std::sqrt(d2);
        res.lambda = update_interval_duals(res.lambda, next, alpha_at(params.interval.alpha, mu));
        res.beliefs = next;
        done = mu;
        res.outer_residuals.push_back(residual);
        if (opts.record_trace) sink({"lascopf", mu, 0, 0, -1, mu, residual, change, 0.0, residual});
        log::info("interval consensus ", mu, ": residual ", residual, " MW, change ", change, " MW");
        const bool inner_ok = std::all_of(sols.begin(), sols.end(),
                                          [](const ScopfSolution& s) { return s.status == SolveStatus::converged; });
        if (residual <= params.interval.tolerance && change <= params.interval.step_tolerance && inner_ok) break;
    }
    res.outer_iterations = horizon == 1 ? 0 : done;

    res.dispatch_mw = res.beliefs.own;
    res.objective = dispatch_cost(spec, res.dispatch_mw);
    res.intervals = std::move(sols);
    res.warm = {res.beliefs, res.lambda, scwarm};
    if (!failed) {
        const bool inner_ok = std::all_of(res.intervals.begin(), res.intervals.end(),
                                          [](const ScopfSolution& s) { return s.status == SolveStatus::converged; });
        const bool outer_ok = horizon == 1 || (!res.outer_residuals.empty() &&
                                               res.outer_residuals.back() <= params.interval.tolerance &&
                                               change <= params.interval.step_tolerance);
        res.status = inner_ok && outer_ok ? SolveStatus::converged : SolveStatus::unconverged;
        if (!outer_ok) res.message = "interval consensus not reached in " + std::to_string(max_outer) + " iterations";
        else if (!inner_ok)
            for (const auto& s : res.intervals)
                if (s.status != SolveStatus::converged) {
                    res.message = s.message;
                    break;
                }
    }
    return res;
}

LascopfResult lascopf_solve(const CaseSpec& spec, const LascopfParams& params) {
    const auto net = build_network(spec);
    const auto scenarios = generate_scenarios(net, spec.contingency_lines);
    auto res = lascopf_solve(spec, net, scenarios, params);
    for (auto& s : res.intervals) s.warm = {};
    res.warm.intervals.clear();
    return res;
}

RollOutput mpc_roll(const CaseSpec& spec, const LascopfResult& solved, std::span<const double> new_row) {
    if (new_row.size() != spec.forecast.size())
        throw ValidationError("roll: new forecast row has " + std::to_string(new_row.size()) + " entries, expected " +
                              std::to_string(spec.forecast.size()));
    if (solved.dispatch_mw.empty()) throw ValidationError("roll: the solved horizon has no dispatch");
    RollOutput out;
    out.next = spec;
    for (std::size_t g = 0; g < spec.generators.size(); ++g) {
        const auto& gen = spec.generators[g];
        out.next.generators[g].sched_mw = std::clamp(solved.dispatch_mw[0][g], gen.p_min, gen.p_max);
    }
    out.next.loads.clear();
    for (std::size_t i = 0; i < spec.forecast.size(); ++i) {
        auto& s = out.next.forecast[i];
        out.next.loads.push_back({s.bus, s.mw.front()});
        s.mw.erase(s.mw.begin());
        s.mw.push_back(new_row[i]);
    }
    validate_case(out.next);

    const int horizon = spec.horizon;
    const auto& w = solved.warm;
    LascopfWarm next;
    next.beliefs = w.beliefs;
    next.lambda = w.lambda;
    if (w.beliefs.horizon == horizon) {
        for (int t = 0; t + 1 < horizon; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            next.beliefs.own[ti] = w.beliefs.own[ti + 1];
            if (t >= 1) next.beliefs.prev[ti] = w.beliefs.prev[ti + 1];
            if (t + 2 < horizon) next.beliefs.next[ti] = w.beliefs.next[ti + 1];
            else if (t + 1 < horizon) next.beliefs.next[ti] = w.beliefs.own[ti + 1];
        }
        if (horizon >= 2) next.beliefs.prev[static_cast<std::size_t>(horizon - 1)] = w.beliefs.own[static_cast<std::size_t>(horizon - 1)];
        for (std::size_t k = 0; k + 2 < next.lambda.slots.size(); ++k) next.lambda.slots[k] = w.lambda.slots[k + 2];
    }
    if (w.intervals.size() == static_cast<std::size_t>(horizon)) {
        next.intervals = w.intervals;
        for (int t = 0; t + 1 < horizon; ++t)
            next.intervals[static_cast<std::size_t>(t)] = w.intervals[static_cast<std::size_t>(t + 1)];
    }
    out.warm = std::move(next);
    return out;
}

}  // namespace lascopf
