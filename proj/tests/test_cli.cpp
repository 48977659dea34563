#include <algorithm>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "doctest.h"
#include "lascopf/runner.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace lascopf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome run_cli(const std::string& args) {
    const std::string cmd = std::string(LASCOPF_CLI) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    Outcome o;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
    const int status = pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

std::string data(const char* name) { return lascopf::test::data_path(name).string(); }

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("lascopf_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

long expected_rows(const json& j) {
    long n = 0;
    for (const auto& layer : j["trace_layers"]) n += j["iterations"][layer.get<std::string>()].get<long>();
    return n;
}

}  // namespace

TEST_CASE("exit codes") {
    CHECK(run_cli("--case " + data("case1.json") + " --mode opf").code == 0);
    CHECK(run_cli("--case " + data("case5.json") + " --mode opf --max-iter 5").code == 2);
    CHECK(run_cli("--case " + data("case3_overload.json") + " --mode oracle").code == 3);
    CHECK(run_cli("--case " + data("case3_overload.json") + " --mode lascopf").code == 3);
    CHECK(run_cli("--case " + data("case1.json") + " --mode nonsense").code == 64);
    CHECK(run_cli("--mode opf").code == 64);
    CHECK(run_cli("--case /nonexistent/case.json").code == 64);
    CHECK(run_cli("--case " + data("case5.json") + " --contingencies 99").code == 64);
}

TEST_CASE("single bus OPF dispatches the load") {
    const auto o = run_cli("--case " + data("case1.json") + " --mode opf");
    REQUIRE(o.code == 0);
    const auto j = json::parse(o.out);
    CHECK(j["schema_version"] == 1);
    CHECK(j["converged"]["pmp"] == true);
    CHECK(std::abs(j["dispatch_mw"][0][0].get<double>() - 140.0) <= 0.06);
}

TEST_CASE("trace rows equal the reported iteration counts") {
    for (const std::string mode : {"opf", "scopf-pmp", "lascopf"}) {
        const auto trace = scratch("trace_" + mode + ".csv");
        const auto js = scratch("out_" + mode + ".json");
        std::string args = "--case " + data("case5.json") + " --mode " + mode + " --out-trace " + trace.string() +
                           " --out-json " + js.string();
        if (mode == "lascopf") args += " --horizon 2 --contingencies none";
        const auto o = run_cli(args);
        REQUIRE(o.code == 0);
        const auto j = json::parse(slurp(js));
        const auto rows = lines_of(slurp(trace));
        REQUIRE(!rows.empty());
        CHECK(rows[0] == std::string(trace_csv_header));
        CHECK(static_cast<long>(rows.size()) - 1 == expected_rows(j));
    }
}

TEST_CASE("JSON summary does not depend on the worker count") {
    const std::string base = "--case " + data("case5.json") + " --mode lascopf --horizon 2 --contingencies 1,2,3";
    const auto a = run_cli(base + " --jobs 1 --seed 4");
    const auto b = run_cli(base + " --jobs 3 --seed 4");
    const auto c = run_cli(base + " --jobs 1 --seed 4");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
}

TEST_CASE("roll mode appends one row per roll with warm starts no slower than cold") {
    const auto o = run_cli("--case " + data("case5.json") + " --mode roll --rolls 2 --horizon 3 --contingencies none");
    REQUIRE(o.code == 0);
    const auto j = json::parse(o.out);
    REQUIRE(j["rolls"].size() == 2);
    std::vector<long> warm, cold;
    for (const auto& r : j["rolls"]) {
        CHECK(r["dispatch_mw"].size() == 2);
        warm.push_back(r["warm_iterations"].get<long>());
        cold.push_back(r["cold_iterations"].get<long>());
    }
    std::sort(warm.begin(), warm.end());
    std::sort(cold.begin(), cold.end());
    CHECK(warm[0] + warm[1] <= cold[0] + cold[1]);
}

TEST_CASE("compare mode on the five-bus case") {
    const auto o = run_cli("--case " + data("case5.json") + " --mode compare");
    REQUIRE(o.code == 0);
    const auto j = json::parse(o.out);
    CHECK(std::abs(j["comparison"]["percentage_difference"].get<double>()) <= 0.2);
    CHECK(j["feasibility"]["ok"] == true);
}

TEST_CASE("base OPF dispatch matches the centralized dispatch") {
    const auto a = json::parse(run_cli("--case " + data("case5.json") + " --mode opf").out);
    const auto b = json::parse(run_cli("--case " + data("case5.json") + " --mode oracle --horizon 1 --contingencies none").out);
    for (std::size_t g = 0; g < 2; ++g)
        CHECK(std::abs(a["dispatch_mw"][0][g].get<double>() - b["dispatch_mw"][0][g].get<double>()) <= 0.5);
}

TEST_CASE("flag overrides reach the solver") {
    const auto o = run_cli("--case " + data("case5.json") +
                           " --mode lascopf --horizon 2 --contingencies none --beta 150 --gamma 80"
                           " --alpha-schedule lascopf:8@5,0.5 --alpha-schedule scopf:4@5,0.5 --eps-app-lascopf 0.5"
                           " --eps-app-scopf 0.6 --max-outer 200 --max-inner 3000 --timing");
    CHECK(o.code == 0);
    const auto j = json::parse(o.out);
    CHECK(j.contains("timing"));
    CHECK(run_cli("--case " + data("case5.json") + " --alpha-schedule bogus:1").code == 64);
}

TEST_CASE("compare of identical reports is zero") {
    RunConfig cfg;
    cfg.case_path = lascopf::test::data_path("case5.json");
    cfg.mode = Mode::oracle;
    const auto rep = run(cfg);
    const auto d = compare(rep, rep);
    CHECK(d.percentage_difference == 0.0);
    for (double v : d.max_dispatch_dev_mw) CHECK(v == 0.0);
    for (double v : d.max_lmp_dev) CHECK(v == 0.0);

    auto other = rep;
    other.dispatch_mw.pop_back();
    CHECK_THROWS(compare(rep, other));
}

TEST_CASE("mode names and contingency lists") {
    for (const char* m : {"opf", "scopf-pmp", "scopf-apmp", "lascopf", "roll", "oracle", "compare"})
        CHECK(std::string(to_string(parse_mode(m))) == m);
    CHECK_THROWS(parse_mode("ac-opf"));
    const auto spec = lascopf::test::load_case("case5.json");
    CHECK(parse_contingencies("all", spec).size() == 7);
    CHECK(parse_contingencies("none", spec).empty());
    CHECK(parse_contingencies("1,3", spec) == std::vector<int>{1, 3});
    CHECK(exit_code(SolveStatus::converged) == 0);
    CHECK(exit_code(SolveStatus::unconverged) == 2);
    CHECK(exit_code(SolveStatus::infeasible) == 3);
    CHECK(exit_code(SolveStatus::diverged) == 3);
}
