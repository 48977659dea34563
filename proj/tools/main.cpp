#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lascopf/error.hpp"
#include "lascopf/runner.hpp"

namespace {

constexpr int usage_exit = 64;
constexpr int internal_exit = 70;

void apply_schedule(lascopf::RunConfig& cfg, const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw lascopf::UsageError("--alpha-schedule expects scopf:<schedule> or lascopf:<schedule>");
    const std::string layer = text.substr(0, colon);
    const auto schedule = lascopf::parse_alpha_schedule(text.substr(colon + 1));
    if (layer == "scopf")
        cfg.scenario.alpha = schedule;
    else if (layer == "lascopf")
        cfg.interval.alpha = schedule;
    else
        throw lascopf::UsageError("--alpha-schedule: unknown layer '" + layer + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Look-ahead security-constrained OPF by nested proximal message passing"};
    app.set_version_flag("--version", "lascopf 0.1.0");

    lascopf::RunConfig cfg;
    std::string case_path, mode = "lascopf", contingencies, forecast, out_json, out_trace;
    std::vector<std::string> schedules;
    std::optional<int> horizon;
    std::optional<double> rho0, eps_abs, beta, gamma, eps_app_scopf, eps_app_lascopf;
    std::optional<int> max_outer, max_inner;

    app.add_option("--case", case_path, "Case file (.json native or .m MATPOWER)")->required();
    app.add_option("--mode", mode, "opf | scopf-pmp | scopf-apmp | lascopf | roll | oracle | compare")
        ->capture_default_str();
    app.add_option("--horizon", horizon, "Number of look-ahead intervals (default: case horizon)");
    app.add_option("--contingencies", contingencies, "Line ids (comma list), all or none (default: case list)");
    app.add_option("--forecast", forecast, "Forecast CSV replacing the case forecast (bus,1,2,...)");
    app.add_option("--rho0", rho0, "Fixed initial rho (pu); disables the curvature rule");
    app.add_flag("--rho-adapt", cfg.pmp.adapt_rho, "Enable the rho controller");
    app.add_option("--eps-pri", cfg.pmp.eps_pri, "PMP primal tolerance (MW)")->capture_default_str();
    app.add_option("--eps-dual", cfg.pmp.eps_dual, "PMP dual tolerance")->capture_default_str();
    app.add_option("--eps-abs", eps_abs, "Scaled PMP tolerance: eps_abs * sqrt(terminals * scenarios)");
    app.add_option("--eps-app-scopf", eps_app_scopf, "Scenario consensus tolerance (MW, default 0.7)");
    app.add_option("--eps-app-lascopf", eps_app_lascopf, "Interval consensus tolerance (MW, default 0.6)");
    app.add_option("--alpha-schedule", schedules, "Step schedule per layer, e.g. scopf:5@5,3@10,0.5 (repeatable)");
    app.add_option("--beta", beta, "Proximity weight for both APP layers (default 200)");
    app.add_option("--gamma", gamma, "Consensus weight for both APP layers (default 100)");
    app.add_option("--max-iter", cfg.pmp.max_iter, "PMP iteration cap")->capture_default_str();
    app.add_option("--max-outer", max_outer, "Interval consensus iteration cap (default 100)");
    app.add_option("--max-inner", max_inner, "Scenario consensus iteration cap (default 5000)");
    app.add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Seed recorded in the report")->capture_default_str();
    app.add_option("--rolls", cfg.rolls, "Roll mode: number of receding-horizon steps")->capture_default_str();
    app.add_flag("--trace-pmp", cfg.trace_pmp, "APP modes: also trace every PMP iteration");
    app.add_flag("--timing", cfg.timing, "Include wall times in the JSON summary");
    app.add_option("--out-json", out_json, "Write the JSON summary here (default: stdout)");
    app.add_option("--out-trace", out_trace, "Write the CSV trace here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage_exit;
    }

    try {
        cfg.case_path = case_path;
        cfg.mode = lascopf::parse_mode(mode);
        cfg.horizon = horizon;
        if (!contingencies.empty()) cfg.contingencies = contingencies;
        if (!forecast.empty()) cfg.forecast_csv = forecast;
        if (rho0) {
            cfg.pmp.rho0 = *rho0;
            cfg.pmp.auto_rho = false;
        }
        cfg.pmp.eps_abs = eps_abs;
        for (const auto& s : schedules) apply_schedule(cfg, s);
        if (beta) cfg.scenario.beta = cfg.interval.beta = *beta;
        if (gamma) cfg.scenario.gamma = cfg.interval.gamma = *gamma;
        if (eps_app_scopf) cfg.scenario.tolerance = *eps_app_scopf;
        if (eps_app_lascopf) cfg.interval.tolerance = *eps_app_lascopf;
        if (max_outer) cfg.interval.max_outer = *max_outer;
        if (max_inner) cfg.scenario.max_outer = *max_inner;
        if (!out_json.empty()) cfg.out_json = out_json;
        if (!out_trace.empty()) cfg.out_trace = out_trace;

        const auto report = lascopf::run(cfg);
        if (!cfg.out_json) std::cout << lascopf::report_json(report, cfg.timing) << '\n';
        std::fprintf(stderr, "%s: %s, objective %.6f $/h%s%s\n", lascopf::to_string(cfg.mode),
                     lascopf::to_string(report.status), report.objective, report.message.empty() ? "" : ": ",
                     report.message.c_str());
        return lascopf::exit_code(report.status);
    } catch (const lascopf::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return usage_exit;
    } catch (const lascopf::ParseError& e) {
        std::fprintf(stderr, "case error: %s\n", e.what());
        return usage_exit;
    } catch (const lascopf::ValidationError& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return usage_exit;
    } catch (const lascopf::BuildError& e) {
        std::fprintf(stderr, "invalid network: %s\n", e.what());
        return usage_exit;
    } catch (const lascopf::InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return lascopf::exit_code(lascopf::SolveStatus::infeasible);
    } catch (const lascopf::DivergenceError& e) {
        std::fprintf(stderr, "diverged: %s\n", e.what());
        return lascopf::exit_code(lascopf::SolveStatus::diverged);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return internal_exit;
    }
}
