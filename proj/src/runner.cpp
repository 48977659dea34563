#include "lascopf/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "lascopf/error.hpp"
#include "lascopf/log.hpp"
#include "lascopf/network.hpp"
#include "lascopf/oracle.hpp"
#include "lascopf/worker_pool.hpp"

namespace lascopf {

namespace {

struct ModeName {
    Mode mode;
    const char* name;
};

constexpr ModeName mode_names[] = {
    {Mode::opf, "opf"},         {Mode::scopf_pmp, "scopf-pmp"}, {Mode::scopf_apmp, "scopf-apmp"},
    {Mode::lascopf, "lascopf"}, {Mode::roll, "roll"},           {Mode::oracle, "oracle"},
    {Mode::compare, "compare"},
};

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int severity(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return 0;
        case SolveStatus::unconverged: return 1;
        case SolveStatus::diverged: return 2;
        case SolveStatus::infeasible: return 3;
    }
    return 3;
}

SolveStatus worst(SolveStatus a, SolveStatus b) { return severity(a) >= severity(b) ? a : b; }

double ramp_violation_pu(const CaseSpec& spec, const std::vector<std::vector<double>>& dispatch) {
    double worst_mw = 0.0;
    for (std::size_t g = 0; g < spec.generators.size(); ++g) {
        const auto& gen = spec.generators[g];
        double prev = gen.sched_mw;
        for (const auto& row : dispatch) {
            const double step = row[g] - prev;
            worst_mw = std::max({worst_mw, step - gen.ramp_up, gen.ramp_down - step});
            prev = row[g];
        }
    }
    return worst_mw / spec.base_mva;
}

CaseSpec truncate(CaseSpec spec, int horizon) {
    if (horizon < 1 || horizon > spec.horizon)
        throw UsageError("--horizon must be between 1 and " + std::to_string(spec.horizon));
    spec.horizon = horizon;
    for (auto& s : spec.forecast) s.mw.resize(static_cast<std::size_t>(horizon));
    return spec;
}

// Forecast columns past the solved horizon, one row per roll.
std::vector<std::vector<double>> future_rows(const CaseSpec& full, int horizon) {
    std::vector<std::vector<double>> rows;
    for (int k = horizon; k < full.horizon; ++k) {
        std::vector<double> row;
        for (const auto& s : full.forecast) row.push_back(s.mw[static_cast<std::size_t>(k)]);
        rows.push_back(std::move(row));
    }
    return rows;
}

CaseSpec load_full(const RunConfig& config) {
    CaseSpec spec = read_case_file(config.case_path);
    if (config.forecast_csv) apply_forecast_csv(spec, read_text(*config.forecast_csv));
    if (config.contingencies) spec.contingency_lines = parse_contingencies(*config.contingencies, spec);
    return spec;
}

void validate_config(const RunConfig& config) {
    if (config.jobs < 1) throw UsageError("--jobs must be at least 1");
    if (config.rolls < 1) throw UsageError("--rolls must be at least 1");
    if (config.pmp.max_iter < 1) throw UsageError("--max-iter must be at least 1");
    if (!(config.pmp.rho0 > 0.0)) throw UsageError("--rho0 must be positive");
    if (!(config.pmp.eps_pri > 0.0) || !(config.pmp.eps_dual > 0.0)) throw UsageError("PMP tolerances must be positive");
    for (const AppParams* app : {&config.scenario, &config.interval}) {
        try {
            validate_schedule(app->alpha);
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
        if (!(app->beta > 0.0) || !(app->gamma > 0.0)) throw UsageError("--beta and --gamma must be positive");
        if (!(app->tolerance > 0.0)) throw UsageError("APP tolerances must be positive");
        if (app->max_outer < 1) throw UsageError("--max-outer must be at least 1");
    }
}

void describe(SolveReport& rep, const CaseSpec& spec, const DtnNetwork& net, const ScenarioSet& scenarios,
              const RunConfig& config) {
    rep.case_name = spec.name;
    rep.mode = config.mode;
    rep.seed = config.seed;
    rep.horizon = spec.horizon;
    for (const auto& g : spec.generators) rep.generator_ids.push_back(g.id);
    rep.net_buses = net.net_bus;
    for (int c = 0; c < scenarios.size(); ++c) {
        const int r = scenarios.outaged_line[static_cast<std::size_t>(c)];
        rep.scenario_outages.push_back(r < 0 ? -1 : net.lines[static_cast<std::size_t>(r)].id);
    }
}

// Single-interval PMP over the given scenario labels.
void solve_pmp_mode(SolveReport& rep, const CaseSpec& spec, const DtnNetwork& net, const ScenarioSet& scenarios,
                    std::span<const int> labels, const RunConfig& config, const TraceSink& sink) {
    const auto sub = make_opf_subproblem(net, scenarios, labels, 1, load_vector(net, spec, 1), true);
    PmpParams pp = config.pmp;
    pp.record_trace = false;
    PmpSink psink;
    if (sink)
        psink = [&](const PmpTraceRecord& r) {
            sink({"pmp", 0, 0, 1, labels.size() == 1 ? labels[0] : -1, r.iter, r.r_norm, r.s_norm, r.rho, r.objective});
        };
    const auto res = run_pmp(sub, std::nullopt, pp, psink);
    const double base = net.base_mva;
    const int N = net.net_count();

    rep.status = res.report.status;
    rep.message = res.report.message;
    rep.pmp_iterations = res.report.iterations;
    rep.trace_layers = {"pmp"};
    rep.pmp_converged = res.report.converged();
    rep.pmp_r_norm = res.report.r_norm;
    rep.pmp_s_norm = res.report.s_norm;
    rep.seq_seconds = rep.crit_seconds = res.report.wall_seconds;

    const auto dispatch = layer_dispatch_mw(sub, res.plan, 0);
    rep.dispatch_mw = {dispatch};
    rep.objective = dispatch_cost(spec, rep.dispatch_mw);
    const auto lmp = recover_lmp(sub, res.duals);
    rep.lmp.assign(1, {});
    for (int l = 0; l < sub.layers; ++l)
        rep.lmp[0].emplace_back(lmp.begin() + l * N, lmp.begin() + (l + 1) * N);

    auto& f = rep.feasibility;
    f.imbalance_limit_mw = stop_thresholds(pp, net.terminal_count(), sub.layers).pri;
    f.max_flow_excess_mw = -INFINITY;
    for (int l = 0; l < sub.layers; ++l) {
        for (int n = 0; n < N; ++n)
            f.max_imbalance_mw = std::max(f.max_imbalance_mw, std::abs(res.plan.p_avg[static_cast<std::size_t>(l * N + n)]) * base);
        for (std::size_t r = 0; r < net.lines.size(); ++r) {
            const double b = sub.lines[r].susceptance[static_cast<std::size_t>(l)];
            if (b == 0.0) continue;
            const auto& line = net.lines[r];
            const double d = res.plan.theta_avg[static_cast<std::size_t>(l * N + line.from_net)] -
                             res.plan.theta_avg[static_cast<std::size_t>(l * N + line.to_net)];
            f.max_flow_excess_mw = std::max(f.max_flow_excess_mw,
                                            std::abs(b * d) * base - sub.lines[r].limit[static_cast<std::size_t>(l)] * base);
        }
    }
    f.max_ramp_violation_pu = ramp_violation_pu(spec, rep.dispatch_mw);
}

void fill_from_lascopf(SolveReport& rep, const CaseSpec& spec, const DtnNetwork& net, const LascopfResult& res,
                       const RunConfig& config) {
    rep.status = res.status;
    rep.message = res.message;
    rep.objective = res.objective;
    rep.pmp_iterations += res.pmp_iterations;
    rep.scopf_iterations += res.inner_iterations;
    rep.lascopf_iterations += res.outer_iterations;
    rep.trace_layers = {"scopf", "lascopf"};
    if (config.trace_pmp) rep.trace_layers.insert(rep.trace_layers.begin(), "pmp");
    rep.seq_seconds += res.seq_seconds;
    rep.crit_seconds += res.crit_seconds;
    rep.lascopf_residuals = res.outer_residuals;
    rep.dispatch_mw = res.dispatch_mw;
    rep.lmp.clear();
    rep.scopf_residuals.clear();

    bool pmp_ok = !res.intervals.empty();
    bool scopf_ok = !res.intervals.empty();
    rep.pmp_r_norm = rep.pmp_s_norm = 0.0;
    auto& f = rep.feasibility;
    f = {};
    f.imbalance_limit_mw = stop_thresholds(config.pmp, net.terminal_count(), 1).pri;
    f.max_flow_excess_mw = -INFINITY;
    for (const auto& iv : res.intervals) {
        scopf_ok = scopf_ok && iv.status == SolveStatus::converged;
        rep.scopf_residuals.push_back(iv.residual);
        std::vector<std::vector<double>> table;
        for (const auto& sc : iv.scenarios) {
            pmp_ok = pmp_ok && sc.status == SolveStatus::converged;
            rep.pmp_r_norm = std::max(rep.pmp_r_norm, sc.r_norm);
            rep.pmp_s_norm = std::max(rep.pmp_s_norm, sc.s_norm);
            auto share = sc.lmp;
            for (double& v : share) v /= static_cast<double>(iv.scenarios.size());
            table.push_back(std::move(share));
            f.max_imbalance_mw = std::max(f.max_imbalance_mw, sc.max_imbalance_mw);
            for (std::size_t r = 0; r < sc.flows_mw.size(); ++r)
                if (std::isfinite(sc.limits_mw[r]))
                    f.max_flow_excess_mw = std::max(f.max_flow_excess_mw, std::abs(sc.flows_mw[r]) - sc.limits_mw[r]);
        }
        rep.lmp.push_back(std::move(table));
    }
    rep.pmp_converged = pmp_ok;
    rep.scopf_converged = scopf_ok;
    rep.lascopf_converged = res.status == SolveStatus::converged;
    f.max_ramp_violation_pu = rep.dispatch_mw.empty() ? 0.0 : ramp_violation_pu(spec, rep.dispatch_mw);
}

void fill_from_oracle(SolveReport& rep, const CaseSpec& spec, const DtnNetwork& net, const ScenarioSet& scenarios,
                      const OracleSolution& sol) {
    rep.status = sol.feasible ? SolveStatus::converged : SolveStatus::infeasible;
    rep.message = sol.feasible ? "" : sol.certificate;
    rep.trace_layers.clear();
    if (!sol.feasible) return;
    rep.objective = sol.objective;
    rep.oracle_objective = sol.objective;
    rep.dispatch_mw = sol.dispatch_mw;
    rep.lmp = sol.lmp;
    auto& f = rep.feasibility;
    f = {};
    f.max_imbalance_mw = sol.max_imbalance_mw;
    f.max_flow_excess_mw = -INFINITY;
    for (const auto& per_t : sol.flows_mw)
        for (std::size_t c = 0; c < per_t.size(); ++c)
            for (std::size_t r = 0; r < per_t[c].size(); ++r) {
                const double lim = scenarios.flow_limit[c][r];
                if (std::isfinite(lim)) f.max_flow_excess_mw = std::max(f.max_flow_excess_mw, std::abs(per_t[c][r]) - lim * net.base_mva);
            }
    f.max_ramp_violation_pu = ramp_violation_pu(spec, rep.dispatch_mw);
}

LascopfParams lascopf_params(const RunConfig& config, bool record) {
    LascopfParams p;
    p.pmp = config.pmp;
    p.scenario = config.scenario;
    p.interval = config.interval;
    p.record_trace = record;
    p.trace_pmp = config.trace_pmp;
    return p;
}

void finish_feasibility(SolveReport& rep, const RunConfig& config) {
    auto& f = rep.feasibility;
    f.flow_margin_mw = 2.0 * config.pmp.eps_pri;
    if (!std::isfinite(f.max_flow_excess_mw)) f.max_flow_excess_mw = 0.0;
    if (rep.mode == Mode::oracle) f.imbalance_limit_mw = 1e-6;
    f.ok = f.max_imbalance_mw <= f.imbalance_limit_mw && f.max_ramp_violation_pu <= f.ramp_limit_pu &&
           f.max_flow_excess_mw <= f.flow_margin_mw;
    if (rep.status == SolveStatus::converged && !f.ok)
        log::info("converged run fails the feasibility check: imbalance ", f.max_imbalance_mw, " MW, ramp ",
                  f.max_ramp_violation_pu, " pu, flow excess ", f.max_flow_excess_mw, " MW");
}

SolveReport run_impl(const RunConfig& config, const TraceSink& sink) {
    validate_config(config);
    const CaseSpec full = load_full(config);
    const int horizon = config.mode == Mode::opf || config.mode == Mode::scopf_pmp || config.mode == Mode::scopf_apmp
                            ? 1
                            : config.horizon.value_or(full.horizon);
    if (config.horizon && (*config.horizon < 1 || *config.horizon > full.horizon))
        throw UsageError("--horizon must be between 1 and " + std::to_string(full.horizon));
    const CaseSpec spec = truncate(full, horizon);
    const DtnNetwork net = build_network(spec);
    const ScenarioSet scenarios = generate_scenarios(net, spec.contingency_lines);
    std::unique_ptr<WorkerPool> owned;
    if (config.jobs > 1) owned = std::make_unique<WorkerPool>(config.jobs);
    WorkerPool* pool = owned.get();

    SolveReport rep;
    describe(rep, spec, net, scenarios, config);
    std::vector<int> all_labels;
    for (int c = 0; c < scenarios.size(); ++c) all_labels.push_back(c);

    switch (config.mode) {
        case Mode::opf: {
            const int base[1] = {0};
            rep.scenario_outages = {-1};
            solve_pmp_mode(rep, spec, net, scenarios, base, config, sink);
            break;
        }
        case Mode::scopf_pmp:
            solve_pmp_mode(rep, spec, net, scenarios, all_labels, config, sink);
            break;
        case Mode::scopf_apmp:
        case Mode::lascopf: {
            const auto res = lascopf_solve(spec, net, scenarios, lascopf_params(config, static_cast<bool>(sink)), nullptr,
                                           pool, sink);
            fill_from_lascopf(rep, spec, net, res, config);
            break;
        }
        case Mode::oracle: {
            const auto t0 = std::chrono::steady_clock::now();
            const auto sol = solve_centralized(spec, spec.contingency_lines, spec.horizon);
            rep.seq_seconds = rep.crit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            fill_from_oracle(rep, spec, net, scenarios, sol);
            break;
        }
        case Mode::compare: {
            const auto res = lascopf_solve(spec, net, scenarios, lascopf_params(config, static_cast<bool>(sink)), nullptr,
                                           pool, sink);
            fill_from_lascopf(rep, spec, net, res, config);
            const auto sol = solve_centralized(spec, spec.contingency_lines, spec.horizon);
            if (!sol.feasible) {
                rep.status = SolveStatus::infeasible;
                rep.message = "oracle: " + sol.certificate;
                break;
            }
            rep.oracle_objective = sol.objective;
            if (rep.status != SolveStatus::infeasible) {
                SolveReport ref = rep;
                fill_from_oracle(ref, spec, net, scenarios, sol);
                rep.comparison = compare(rep, ref);
            }
            break;
        }
        case Mode::roll: {
            const auto future = future_rows(full, horizon);
            const auto params = lascopf_params(config, static_cast<bool>(sink));
            auto res = lascopf_solve(spec, net, scenarios, params, nullptr, pool, sink);
            fill_from_lascopf(rep, spec, net, res, config);
            SolveStatus status = rep.status;
            CaseSpec cur = spec;
            for (int k = 1; k <= config.rolls && status != SolveStatus::infeasible; ++k) {
                std::vector<double> row;
                if (static_cast<std::size_t>(k) <= future.size()) {
                    row = future[static_cast<std::size_t>(k - 1)];
                } else {
                    for (const auto& s : cur.forecast) row.push_back(s.mw.back());
                }
                auto next = mpc_roll(cur, res, row);
                const DtnNetwork next_net = build_network(next.next);
                const ScenarioSet next_sc = generate_scenarios(next_net, next.next.contingency_lines);
                auto warm = lascopf_solve(next.next, next_net, next_sc, params, &next.warm, pool, sink);
                const auto cold = lascopf_solve(next.next, next_net, next_sc, lascopf_params(config, false), nullptr, pool);
                RollRecord rec;
                rec.roll = k;
                rec.dispatch_mw = warm.dispatch_mw.empty() ? std::vector<double>{} : warm.dispatch_mw.front();
                rec.status = warm.status;
                rec.warm_iterations = warm.inner_iterations;
                rec.cold_iterations = cold.inner_iterations;
                rec.objective = warm.objective;
                log::info("roll ", k, ": ", to_string(warm.status), ", scenario iterations warm ", rec.warm_iterations,
                          " cold ", rec.cold_iterations);
                const long pmp = rep.pmp_iterations, scopf = rep.scopf_iterations, outer = rep.lascopf_iterations;
                const double seq = rep.seq_seconds, crit = rep.crit_seconds;
                fill_from_lascopf(rep, next.next, next_net, warm, config);
                rep.pmp_iterations = pmp + warm.pmp_iterations;
                rep.scopf_iterations = scopf + warm.inner_iterations;
                rep.lascopf_iterations = outer + warm.outer_iterations;
                rep.seq_seconds = seq + warm.seq_seconds;
                rep.crit_seconds = crit + warm.crit_seconds;
                rep.rolls.push_back(std::move(rec));
                status = worst(status, warm.status);
                cur = next.next;
                res = std::move(warm);
            }
            rep.status = status;
            break;
        }
    }
    finish_feasibility(rep, config);
    return rep;
}

}  // namespace

Mode parse_mode(std::string_view text) {
    for (const auto& m : mode_names)
        if (text == m.name) return m.mode;
    throw UsageError("unknown mode '" + std::string(text) + "'");
}

const char* to_string(Mode mode) {
    for (const auto& m : mode_names)
        if (m.mode == mode) return m.name;
    return "?";
}

std::vector<int> parse_contingencies(std::string_view text, const CaseSpec& spec) {
    if (text == "none" || text.empty()) return {};
    if (text == "all") return non_islanding_lines(build_network(spec));
    std::vector<int> ids;
    std::stringstream ss{std::string(text)};
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        int id = 0;
        try {
            std::size_t used = 0;
            id = std::stoi(cell, &used);
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw UsageError("--contingencies: '" + cell + "' is not a line id");
        }
        if (spec.line_index(id) < 0) throw UsageError("--contingencies: no line with id " + std::to_string(id));
        if (std::find(ids.begin(), ids.end(), id) != ids.end())
            throw UsageError("--contingencies: line " + std::to_string(id) + " listed twice");
        ids.push_back(id);
    }
    return ids;
}

CaseSpec prepare_case(const RunConfig& config) {
    CaseSpec spec = load_full(config);
    return config.horizon ? truncate(std::move(spec), *config.horizon) : spec;
}

SolveReport run(const RunConfig& config, const TraceSink& sink) {
    std::ofstream trace;
    if (config.out_trace) {
        trace.open(*config.out_trace);
        if (!trace) throw UsageError("cannot write " + config.out_trace->string());
        trace << trace_csv_header << '\n';
    }
    TraceSink combined;
    if (trace.is_open() || sink)
        combined = [&](const TraceRow& row) {
            if (trace.is_open()) trace << trace_csv_row(row) << '\n';
            if (sink) sink(row);
        };
    SolveReport rep = run_impl(config, combined);
    if (config.out_json) {
        std::ofstream out(*config.out_json);
        if (!out) throw UsageError("cannot write " + config.out_json->string());
        out << report_json(rep, config.timing) << '\n';
    }
    return rep;
}

CompareSummary compare(const SolveReport& a, const SolveReport& b) {
    if (a.dispatch_mw.size() != b.dispatch_mw.size())
        throw ValidationError("compare: reports cover a different number of intervals");
    for (std::size_t t = 0; t < a.dispatch_mw.size(); ++t)
        if (a.dispatch_mw[t].size() != b.dispatch_mw[t].size())
            throw ValidationError("compare: reports have different generator counts");
    if (a.lmp.size() != b.lmp.size()) throw ValidationError("compare: LMP tables differ in shape");
    for (std::size_t t = 0; t < a.lmp.size(); ++t) {
        if (a.lmp[t].size() != b.lmp[t].size()) throw ValidationError("compare: LMP tables differ in shape");
        for (std::size_t c = 0; c < a.lmp[t].size(); ++c)
            if (a.lmp[t][c].size() != b.lmp[t][c].size()) throw ValidationError("compare: LMP tables differ in shape");
    }
    CompareSummary out;
    if (b.objective == 0.0)
        out.percentage_difference = a.objective == 0.0 ? 0.0 : INFINITY;
    else
        out.percentage_difference = (a.objective - b.objective) * 100.0 / b.objective;
    const std::size_t G = a.dispatch_mw.empty() ? 0 : a.dispatch_mw.front().size();
    out.max_dispatch_dev_mw.assign(G, 0.0);
    for (std::size_t t = 0; t < a.dispatch_mw.size(); ++t)
        for (std::size_t g = 0; g < G; ++g)
            out.max_dispatch_dev_mw[g] = std::max(out.max_dispatch_dev_mw[g], std::abs(a.dispatch_mw[t][g] - b.dispatch_mw[t][g]));
    for (std::size_t t = 0; t < a.lmp.size(); ++t) {
        if (a.lmp[t].empty()) continue;
        const std::size_t N = a.lmp[t].front().size();
        if (out.max_lmp_dev.size() < N) out.max_lmp_dev.resize(N, 0.0);
        for (std::size_t n = 0; n < N; ++n) {
            double sa = 0.0, sb = 0.0;
            for (std::size_t c = 0; c < a.lmp[t].size(); ++c) {
                sa += a.lmp[t][c][n];
                sb += b.lmp[t][c][n];
            }
            out.max_lmp_dev[n] = std::max(out.max_lmp_dev[n], std::abs(sa - sb));
        }
    }
    return out;
}

std::string report_json(const SolveReport& rep, bool timing) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = SolveReport::schema_version;
    j["case"] = rep.case_name;
    j["mode"] = to_string(rep.mode);
    j["status"] = to_string(rep.status);
    j["message"] = rep.message;
    j["seed"] = rep.seed;
    j["horizon"] = rep.horizon;
    j["generators"] = rep.generator_ids;
    j["nets"] = rep.net_buses;
    j["scenarios"] = rep.scenario_outages;
    j["objective"] = rep.objective;
    j["iterations"] = {{"pmp", rep.pmp_iterations}, {"scopf", rep.scopf_iterations}, {"lascopf", rep.lascopf_iterations}};
    j["trace_layers"] = rep.trace_layers;
    j["converged"] = {{"pmp", rep.pmp_converged}, {"scopf", rep.scopf_converged}, {"lascopf", rep.lascopf_converged}};
    j["residuals"] = {{"pmp_r_norm", rep.pmp_r_norm},
                      {"pmp_s_norm", rep.pmp_s_norm},
                      {"scopf", rep.scopf_residuals},
                      {"lascopf", rep.lascopf_residuals}};
    j["dispatch_mw"] = rep.dispatch_mw;
    j["lmp"] = rep.lmp;
    const auto& f = rep.feasibility;
    j["feasibility"] = {{"ok", f.ok},
                        {"max_imbalance_mw", f.max_imbalance_mw},
                        {"imbalance_limit_mw", f.imbalance_limit_mw},
                        {"max_ramp_violation_pu", f.max_ramp_violation_pu},
                        {"ramp_limit_pu", f.ramp_limit_pu},
                        {"max_flow_excess_mw", f.max_flow_excess_mw},
                        {"flow_margin_mw", f.flow_margin_mw}};
    if (rep.oracle_objective) j["oracle_objective"] = *rep.oracle_objective;
    if (rep.comparison)
        j["comparison"] = {{"percentage_difference", rep.comparison->percentage_difference},
                           {"max_dispatch_dev_mw", rep.comparison->max_dispatch_dev_mw},
                           {"max_lmp_dev", rep.comparison->max_lmp_dev}};
    if (!rep.rolls.empty()) {
        auto& rolls = j["rolls"] = ordered_json::array();
        for (const auto& r : rep.rolls)
            rolls.push_back({{"roll", r.roll},
                             {"status", to_string(r.status)},
                             {"dispatch_mw", r.dispatch_mw},
                             {"objective", r.objective},
                             {"warm_iterations", r.warm_iterations},
                             {"cold_iterations", r.cold_iterations}});
    }
    if (timing) j["timing"] = {{"sequential_s", rep.seq_seconds}, {"critical_path_s", rep.crit_seconds}};
    return j.dump(2);
}

std::string trace_csv_row(const TraceRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%d,%.9g,%.9g,%.9g,%.9g", row.layer.c_str(), row.outer, row.inner,
                  row.interval, row.scenario, row.iter, row.r_norm, row.s_norm, row.rho, row.value);
    return buf;
}

int exit_code(SolveStatus status) {
    switch (status) {
        case SolveStatus::converged: return 0;
        case SolveStatus::unconverged: return 2;
        case SolveStatus::infeasible:
        case SolveStatus::diverged: return 3;
    }
    return 3;
}

}  // namespace lascopf
