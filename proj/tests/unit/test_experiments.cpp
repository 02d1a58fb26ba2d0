#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sspde/experiments.hpp"
#include "sspde/parallel.hpp"

using namespace sspde;

namespace {

// Small settings so studies finish in seconds.
RunConfig small_config(const std::string& extra) {
    return RunConfig::parse(
        "seeds = 1-2\n"
        "solver.n_spatial = 16\n"
        "solver.dt = 0.005\n"
        "solver.store_every = 10\n"
        "analysis.n_spatial = 32\n"
        "analysis.levels = 16,32,64\n"
        "analysis.basepoints = 4\n"
        "analysis.scales = 0.25,0.125\n"
        "growth.t_end = 2\n"
        "growth.massive_t_end = 10\n"
        "growth.massive_dt = 0.005\n" +
        extra);
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("config parsing") {
    const auto c = RunConfig::parse("# comment\nkappa = 0.05\n  sigma = cos:2  # trailing\nseeds = 3,5,9\n");
    CHECK(c.get_double("kappa") == 0.05);
    CHECK(c.get("sigma") == "cos:2");
    CHECK(c.get("noise.family") == "gpam");
    CHECK(c.seeds() == std::vector<std::uint64_t>{3, 5, 9});
    CHECK(RunConfig::parse("seeds = 2-5").seeds() == std::vector<std::uint64_t>{2, 3, 4, 5});
    CHECK(RunConfig::parse(c.to_text()) == c);
    CHECK(c.effective().entries().size() == RunConfig::defaults().size());
    CHECK_THROWS_AS(RunConfig::parse("kapa = 0.1"), Error);
    CHECK_THROWS_AS(RunConfig::parse("kappa 0.1"), Error);
    CHECK_THROWS_AS(RunConfig::parse("kappa =").validate(), Error);
    CHECK_THROWS_AS(RunConfig::parse("seeds = 5-2").seeds(), Error);
    CHECK_THROWS_AS(RunConfig::parse("kappa = x").get_double("kappa"), Error);
    CHECK_THROWS_AS(RunConfig::parse("solver.n_spatial = 1.5").get_int("solver.n_spatial"), Error);
}

TEST_CASE("resolve_run") {
    const auto r = resolve_run(RunConfig::parse("solver.n_spatial = 32"), 4);
    CHECK(r.solver.n_spatial == 32);
    CHECK(r.epsilon == doctest::Approx(3.0 / 32));
    CHECK(r.family == "gpam");
    CHECK(r.problem.sigma.size() == 1);
    const auto sg = resolve_run(RunConfig::parse("noise.family = sine-gordon\nsolver.n_spatial = 16\nsolver.dt = 1e-3"), 1);
    CHECK(sg.problem.sigma.size() == 2);
    CHECK(sg.problem.noise->n_components() == 2);
    const auto w = resolve_run(RunConfig::parse("noise.family = wiener\nsolver.n_spatial = 16\nsolver.dt = 1e-3"), 1);
    CHECK(w.problem.noise->ito());
    CHECK(w.solver.scheme == Scheme::ExponentialEuler);
    CHECK_THROWS_AS(resolve_run(RunConfig::parse("noise.family = levy"), 1), Error);
    CHECK_THROWS_AS(initial_condition("bogus", TorusLattice(8)), Error);
    CHECK(initial_condition("const:2", TorusLattice(8)).mean() == 2.0);
}

TEST_CASE("statistics helpers") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK(iqr({1, 2, 3, 4, 5}) == doctest::Approx(2.0));
    CHECK(std::isnan(median({})));
}

TEST_CASE("studies are deterministic across reruns and thread counts") {
    const auto cfg = small_config("");
    for (const auto* name : {"renorm_sensitivity", "flow"}) {
        const auto c = name == std::string("flow") ? small_config("noise.family = wiener\n") : cfg;
        set_thread_count(1);
        const auto a = run_study(name, c);
        set_thread_count(3);
        const auto b = run_study(name, c);
        set_thread_count(0);
        const auto d = run_study(name, c);
        CHECK(a.tables == b.tables);
        CHECK(a.tables == d.tables);
        CHECK(a.summary.dump() == b.summary.dump());
        CHECK_FALSE(a.tables.empty());
    }
}

TEST_CASE("zero noise and zero data pass every study") {
    const auto cfg = small_config("noise.family = zero\nu0 = zero\n");
    for (const auto& name : study_names()) {
        CAPTURE(name);
        const auto r = run_study(name, cfg);
        CHECK(r.pass);
        CHECK(r.name == name);
    }
    CHECK_THROWS_AS(run_study("nope", cfg), Error);
}

TEST_CASE("reports are written atomically") {
    const auto dir = std::filesystem::temp_directory_path() / "sspde_report_test";
    std::filesystem::remove_all(dir);
    StudyReport r;
    r.name = "demo";
    r.pass = true;
    r.summary = {{"x", 1}};
    r.tables["t.csv"] = "a,b\n1,2\n";
    write_report(dir.string(), r);
    std::ifstream in(dir / "t.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "a,b\n1,2\n");
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    for (const auto& e : std::filesystem::directory_iterator(dir))
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
