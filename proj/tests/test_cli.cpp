#include "doctest.h"

#include "dlme/pipeline.hpp"
#include "test_data.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace dlme;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("dlme_cli_test_" + name);
    fs::remove_all(d);
    return d;
}

RunConfig tutorial(const fs::path& out) {
    RunConfig cfg;
    cfg.case_path = testing::data_path("tutorial6.json");
    cfg.scenario_path = testing::data_path("tutorial6_scenarios.csv");
    cfg.out_dir = out.string();
    return cfg;
}

// silences the progress lines commands print
struct Quiet {
    std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
    std::ostringstream sink;
    ~Quiet() { std::cout.rdbuf(old); }
};

}  // namespace

TEST_CASE("solve writes dispatch tables and a summary") {
    const fs::path out = scratch("solve");
    RunConfig cfg = tutorial(out);
    cfg.dump_program = true;
    CHECK(cmd_solve(cfg) == 0);
    for (const char* f : {"solve_summary.json", "dispatch_spring.csv", "dispatch_winter.csv", "program_spring.txt"})
        CHECK(fs::exists(out / f));
    const auto j = nlohmann::json::parse(slurp(out / "solve_summary.json"));
    REQUIRE(j["scenarios"].size() == 2);
    CHECK(j["scenarios"][0]["constraint_violation"].get<double>() < 1e-6);
    CHECK(slurp(out / "dispatch_spring.csv").rfind("quantity,entity,h1,", 0) == 0);
}

TEST_CASE("signals honours the selection") {
    const fs::path out = scratch("signals");
    RunConfig cfg = tutorial(out);
    cfg.signals = {"dlae"};
    CHECK(cmd_signals(cfg) == 0);
    int csvs = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".csv") ++csvs;
    CHECK(csvs == 2);
    CHECK(fs::exists(out / "dlae_spring.csv"));
    CHECK_FALSE(fs::exists(out / "dlme_spring.csv"));
    const std::string m = slurp(out / "dlae_winter.csv");
    CHECK(m.rfind("bus,h1,h2,", 0) == 0);
    CHECK(std::count(m.begin(), m.end(), '\n') == 7);
}

TEST_CASE("signals with plots and an oracle check") {
    const fs::path out = scratch("fd");
    RunConfig cfg = tutorial(out);
    cfg.signals = {"dlme", "dlme_q"};
    cfg.plots = true;
    cfg.fd_check = 4;
    Quiet q;
    CHECK(cmd_signals(cfg) == 0);
    CHECK(fs::exists(out / "dlme_q_spring.svg"));
    const auto a = nlohmann::json::parse(slurp(out / "fd_audit.json"));
    CHECK(a["samples"] == 4);
    CHECK(a["failures"] == 0);

    cfg.signals = {"rodm"};
    CHECK_THROWS_AS(cmd_signals(cfg), Error);
}

TEST_CASE("dr report") {
    const fs::path out = scratch("dr");
    RunConfig cfg = tutorial(out);
    CHECK(cmd_dr(cfg) == 0);
    const auto j = nlohmann::json::parse(slurp(out / "dr_report.json"));
    for (const auto& s : j["scenarios"]) {
        CHECK(s["enhance_pct"].contains("dlae"));
        CHECK(s["enhance_pct"].contains("rodm"));
        CHECK(s["reduction_t"]["dlme"].get<double>() >= s["reduction_t"]["dlae"].get<double>() - 1e-9);
    }
    const std::string csv = slurp(out / "dr_report.csv");
    CHECK(csv.find("enhance_vs_dlae_pct") != std::string::npos);

    SUBCASE("zero budget") {
        cfg.budget_pct = 0.0;
        CHECK(cmd_dr(cfg) == 0);
        const auto z = nlohmann::json::parse(slurp(out / "dr_report.json"));
        for (const auto& s : z["scenarios"])
            for (const auto& [name, v] : s["post_t"].items())
                CHECK(v.get<double>() == doctest::Approx(s["initial_t"].get<double>()).epsilon(1e-8));
    }
    SUBCASE("daily budget") {
        cfg.daily_budget = true;
        CHECK(cmd_dr(cfg) == 0);
        const auto d = nlohmann::json::parse(slurp(out / "dr_report.json"));
        CHECK(d["budget_mode"] == "daily");
        CHECK(d["scenarios"][0].contains("budget_energy"));
        const double dlme = d["scenarios"][0]["reduction_t"]["dlme"].get<double>();
        CHECK(dlme > 0.0);
    }
    SUBCASE("reactive") {
        cfg.reactive = true;
        CHECK(cmd_dr(cfg) == 0);
        const auto r = nlohmann::json::parse(slurp(out / "dr_report.json"));
        CHECK(r["mode"] == "reactive");
        CHECK_FALSE(r["scenarios"][0].contains("enhance_pct"));
    }
}

TEST_CASE("audit passes on the tutorial feeder") {
    const fs::path out = scratch("audit");
    Quiet q;
    CHECK(cmd_audit(tutorial(out)) == 0);
    CHECK(nlohmann::json::parse(slurp(out / "audit.json"))["pass"] == true);
}

TEST_CASE("outputs are byte-identical across runs") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    for (const fs::path& d : {a, b}) {
        RunConfig cfg = tutorial(d);
        cfg.plots = true;
        CHECK(cmd_signals(cfg) == 0);
        CHECK(cmd_dr(cfg) == 0);
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        CHECK_MESSAGE(slurp(e.path()) == slurp(b / e.path().filename()), e.path().filename().string());
    }
    CHECK(files > 8);
}

TEST_CASE("configuration and input errors") {
    RunConfig cfg = tutorial(scratch("errors"));
    cfg.signals = {"dlme", "nope"};
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = tutorial(scratch("errors"));
    cfg.case_path = "/nonexistent/case.json";
    try {
        cmd_solve(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(exit_code(e.kind()) == 4);
    }

    cfg = tutorial(scratch("errors"));
    cfg.scenario_path.clear();
    CHECK_THROWS_AS(cmd_cluster(cfg), Error);

    CHECK(exit_code(ErrorKind::Usage) == 2);
    CHECK(exit_code(ErrorKind::Parse) == 3);
    CHECK(exit_code(ErrorKind::Validation) == 4);
    CHECK(exit_code(ErrorKind::Solver) == 5);
    CHECK(exit_code(ErrorKind::Infeasible) == 6);
    CHECK(exit_code(ErrorKind::Numerical) == 7);
}
