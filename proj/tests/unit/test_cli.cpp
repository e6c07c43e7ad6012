#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "annuity/commands.hpp"
#include "annuity/config.hpp"
#include "annuity/error.hpp"

using namespace annuity;
using namespace annuity::cli;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test");
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("annuity_cli_" + name)).string();
}

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = temp_path(name);
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::string& command, const std::string& config_text, const Options& opt = {}) {
    const std::string path = config_text.empty() ? "" : write_temp(command + ".conf", config_text);
    std::ostringstream out, err;
    const int code = run(command, path, opt, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig c = parse("# comment\n\nmarket.r = 0.025  # trailing\nnpr.subjective_modal = 70, 75\n"
                              "solver.obstacle = disabled\nsim.seed = 18446744073709551615\nannuity.rate = 0.08\n");
    CHECK(c.params.market.r == 0.025);
    CHECK(c.npr_modal == std::vector<double>{70.0, 75.0});
    CHECK(c.solver.obstacle == hjb::ObstacleMode::Disabled);
    CHECK(c.sim.seed == 18446744073709551615ULL);
    CHECK(c.annuity_rate == 0.08);
    CHECK(c.params.market.mu == 0.07);

    CHECK_THROWS_WITH_AS(parse("market.rr = 1\n"), doctest::Contains("test:1: unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("market.r = 1\nmarket.r = 2\n"), doctest::Contains("test:2:"), ConfigError);
    CHECK_THROWS_AS(parse("market.r 0.02\n"), ConfigError);
    CHECK_THROWS_AS(parse("market.r = 0.02x\n"), ConfigError);
    CHECK_THROWS_AS(parse("grid.n = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("grid.spacing = cubic\n"), ConfigError);
    CHECK_THROWS_AS(parse("npr.subjective_modal = 60,,70\n"), ConfigError);
    CHECK_THROWS_AS(load_config(temp_path("does_not_exist.conf")), ConfigError);
}

TEST_CASE("config text round trip") {
    CHECK(config_text(parse(default_config_text())) == default_config_text());
    const std::string custom = config_text(parse("sim.y0_over_ystar = 0.5\nsurface.ages = 60, 70\nannuity.rate = 0.09\n"));
    CHECK(config_text(parse(custom)) == custom);
#ifdef ANNUITY_SOURCE_DIR
    CHECK(config_text(load_config(ANNUITY_SOURCE_DIR "/configs/default.conf")) == default_config_text());
#endif
}

TEST_CASE("parameters per age") {
    const RunConfig c;
    const model::ModelParams p = params_at(c, 60.0);
    CHECK(p.effective_rate == doctest::Approx(0.03 + 0.1 * std::exp(-2.0)).epsilon(1e-14));
    CHECK(p.annuity_rate > p.market.r);
    RunConfig explicit_k = c;
    explicit_k.annuity_rate = 0.09;
    CHECK(params_at(explicit_k, 60.0).annuity_rate == 0.09);
    CHECK(params_at(c, 70.0).effective_rate > p.effective_rate);
    RunConfig bad = c;
    bad.params.prefs.alpha = 0.0;
    CHECK_THROWS_WITH_AS(params_at(bad, 60.0), doctest::Contains("habit addictiveness"), ConfigError);
    RunConfig constant = c;
    constant.sim_discount = SimDiscount::Constant;
    CHECK(std::holds_alternative<mortality::ConstantForce>(sim_discount_at(constant, 60.0).law));
}

TEST_CASE("npr-table command") {
    const Outcome o = invoke("npr-table", "npr.subjective_modal = 80\n");
    CHECK(o.code == kOk);
    CHECK(o.out == "subjective_modal,npr\n80,1.0000\n");
    CHECK(invoke("npr-table", "npr.subjective_modal = -5\n").code == kConfigError);
    CHECK(invoke("npr-table", "npr.bogus = 1\n").code == kConfigError);

    Options json;
    json.out = temp_path("npr.json");
    json.format = policy::Format::Json;
    CHECK(invoke("npr-table", "", json).code == kOk);
    CHECK(slurp(*json.out).find("\"subjective_modal\": 75.0") != std::string::npos);
}

TEST_CASE("solve command") {
    Options opt;
    opt.out = temp_path("policy.csv");
    const Outcome o = invoke("solve", "grid.n = 400\n", opt);
    REQUIRE(o.code == kOk);
    CHECK(o.out.find("y_star: ") != std::string::npos);
    CHECK(o.out.find("smooth_pasting: ") != std::string::npos);
    CHECK(o.out.find("sweeps: ") != std::string::npos);
    const policy::PolicyTable t = policy::import_table(*opt.out);
    CHECK(t.y.size() == 400);

    const Outcome merton = invoke("solve",
                                  "labor.wage = 0\nlabor.max_labor = 0\nprefs.habit_speed = 1e-6\nprefs.alpha = 1e-8\n"
                                  "solver.obstacle = disabled\ngrid.y_min = 1e-6\ngrid.y_max = 1e4\ngrid.n = 400\n");
    CHECK(merton.code == kOk);
    CHECK(merton.out.find("no stopping region") != std::string::npos);

    const Outcome bad = invoke("solve", "prefs.alpha = 0\n");
    CHECK(bad.code == kConfigError);
    CHECK(bad.err.find("habit addictiveness") != std::string::npos);
    CHECK(invoke("solve", "grid.n = 300\nsolver.max_sweeps = 1\n").code == kNoConvergence);
    const Outcome small = invoke("solve", "grid.n = 300\ngrid.y_max = 30\n");
    CHECK(small.code == kDomainError);
    CHECK(small.err.find("y_max") != std::string::npos);
}

TEST_CASE("simulate command") {
    Options solve_opt;
    solve_opt.out = temp_path("sim_policy.csv");
    REQUIRE(invoke("solve", "grid.n = 400\n", solve_opt).code == kOk);

    Options opt;
    opt.policy_path = solve_opt.out;
    opt.out = temp_path("stats.csv");
    opt.seed = 99;
    const std::string cfg = "sim.paths = 200\nsim.horizon = 10\nsim.y0_over_ystar = 1.2\n";
    const Outcome o = invoke("simulate", cfg, opt);
    REQUIRE(o.code == kOk);
    CHECK(o.out.rfind("seed: 99\n", 0) == 0);
    CHECK(o.out.find("ci_half: 0\n") != std::string::npos);
    CHECK(o.out.find("tau_q50: 0\n") != std::string::npos);

    opt.trace = true;
    opt.benchmark = true;
    CHECK(invoke("simulate", "sim.paths = 50\nsim.horizon = 5\nsim.y0_over_ystar = 0.5\nsim.trace_paths = 2\n", opt).code ==
          kOk);
    CHECK(slurp(*opt.out + ".trace.csv").rfind("path,t,y,Z,kappa,b,p,stopped\n", 0) == 0);
    const policy::PolicyTable bench = policy::import_table(*opt.out + ".benchmark.csv");
    for (double p : bench.portfolio) {
        CHECK(p == model::merton_weight(bench.params));
        CHECK(p == doctest::Approx(0.625).epsilon(1e-15));
    }

    Options missing;
    missing.policy_path = temp_path("no_such_policy.csv");
    CHECK(invoke("simulate", cfg, missing).code == kConfigError);
    Options no_out;
    no_out.trace = true;
    no_out.policy_path = solve_opt.out;
    CHECK(invoke("simulate", cfg, no_out).code == kConfigError);
}

TEST_CASE("surface command") {
    Options opt;
    opt.out = temp_path("surface.csv");
    const Outcome o = invoke("surface", "grid.n = 300\nsurface.ages = 60, 70, 80\n", opt);
    REQUIRE(o.code == kOk);
    const std::string text = slurp(*opt.out);
    std::istringstream in(text);
    std::string line;
    std::vector<double> etas;
    while (std::getline(in, line) && line[0] == '#') {
        const auto pos = line.find("eta=");
        etas.push_back(std::stod(line.substr(pos + 4)));
    }
    REQUIRE(etas.size() == 3);
    CHECK(etas[0] < etas[1]);
    CHECK(etas[1] < etas[2]);
    CHECK(line == "age,y,region,kappa_star,b_star,p_star,pi_scaled");
    CHECK(slurp(*opt.out + ".survival.csv").find("modal,t,survival\n") != std::string::npos);

    // A single-age sweep is the solve export with an age column.
    Options s;
    s.out = temp_path("single_policy.csv");
    REQUIRE(invoke("solve", "grid.n = 300\n", s).code == kOk);
    Options one;
    one.out = temp_path("single_surface.csv");
    REQUIRE(invoke("surface", "grid.n = 300\n", one).code == kOk);
    std::istringstream a(slurp(*s.out)), b(slurp(*one.out));
    std::string la, lb;
    while (std::getline(a, la) && la[0] == '#') {}
    while (std::getline(b, lb) && lb[0] == '#') {}
    CHECK(lb == "age," + la);
    int rows = 0;
    while (std::getline(a, la) && std::getline(b, lb)) {
        CHECK(lb == "60," + la);
        ++rows;
    }
    CHECK(rows == 300);

    CHECK(invoke("surface", "surface.ages = 70, 60\n").code == kConfigError);
    const Outcome partial = invoke("surface", "grid.n = 300\ngrid.y_max = 60\nsurface.ages = 60, 80\n", opt);
    CHECK(partial.code == kNoConvergence);
    CHECK(partial.err.find("failed ages: 60") != std::string::npos);
    CHECK(slurp(*opt.out).find("# age=80") != std::string::npos);
}
