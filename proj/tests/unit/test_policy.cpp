#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "annuity/error.hpp"
#include "annuity/mortality.hpp"
#include "annuity/policy.hpp"

using namespace annuity;
using namespace annuity::policy;

namespace {

model::ModelParams defaults_at_60() {
    const mortality::DiscountSpec d{0.03, mortality::Gompertz{60.0, 80.0, 10.0}};
    model::ModelParams p;
    p.annuity_rate = mortality::fair_rate(d);
    p.effective_rate = mortality::effective_rate(d, 0.0);
    return p;
}

const PolicyTable& solved() {
    static const PolicyTable t = [] {
        hjb::Grid g;
        g.n = 400;
        const auto p = defaults_at_60();
        return from_solution(hjb::solve_vi(g, p, hjb::SolverConfig{}), p, 60.0);
    }();
    return t;
}

// Three regions on five nodes: interior, two corner nodes, two stopped nodes.
PolicyTable synthetic() {
    PolicyTable t;
    t.params = defaults_at_60();
    const double k = t.params.annuity_rate;
    t.y = {1.0, 2.0, 3.0, 4.0, 5.0};
    t.kappa = {1.0, 1.2, 1.4, 4.0 * k, 5.0 * k};
    t.labor = {0.5, 0.8, 0.8, 0.0, 0.0};
    const double w = model::merton_weight(t.params);
    t.portfolio = {2.0, 1.5, 1.0, w, w};
    t.region = {hjb::Region::Interior, hjb::Region::Corner, hjb::Region::Corner, hjb::Region::Stopped,
                hjb::Region::Stopped};
    t.y_tilde = 2.0;
    t.y_star = 3.5;
    t.validate();
    return t;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / (std::string("annuity_test_") + name)).string();
}

void check_identical(const PolicyTable& a, const PolicyTable& b) {
    CHECK(a.y == b.y);
    CHECK(a.kappa == b.kappa);
    CHECK(a.labor == b.labor);
    CHECK(a.portfolio == b.portfolio);
    CHECK(a.region == b.region);
    CHECK(a.y_tilde == b.y_tilde);
    CHECK(a.y_star == b.y_star);
    CHECK(a.age == b.age);
    CHECK(a.params.annuity_rate == b.params.annuity_rate);
    CHECK(a.params.effective_rate == b.params.effective_rate);
    CHECK(a.params.prefs.habit_speed == b.params.prefs.habit_speed);
}

}  // namespace

TEST_CASE("stopping branch is exact") {
    const PolicyTable& t = solved();
    REQUIRE(t.y_star);
    const double ys = *t.y_star, k = t.params.annuity_rate;
    const Controls c = evaluate(t, 2.0 * ys);
    CHECK(c.stopped);
    CHECK(c.kappa == 2.0 * ys * k);
    CHECK(c.labor == 0.0);
    CHECK(c.portfolio == model::merton_weight(t.params));
    CHECK(c.portfolio == doctest::Approx(0.625).epsilon(1e-15));
    const Controls at = evaluate(t, ys);
    CHECK(at.stopped);
    CHECK(at.kappa == ys * k);
    CHECK_FALSE(evaluate(t, 0.99 * ys).stopped);
    const CrosscheckReport cc = closed_form_crosschecks(t, t.params);
    REQUIRE(cc.withdrawal_dev);
    CHECK(*cc.withdrawal_dev < 1e-15);
    CHECK(cc.working_payment == 0.0);
}

TEST_CASE("interpolation stays inside a region") {
    const PolicyTable t = synthetic();
    // Interior to corner at the second node: the interior node is held up to it.
    const Controls below = evaluate(t, 1.5);
    CHECK(below.kappa == 1.0);
    CHECK(below.labor == 0.5);
    const Controls corner = evaluate(t, 2.0);
    CHECK(corner.labor == 0.8);
    const Controls mid = evaluate(t, 2.5);
    CHECK(mid.kappa == doctest::Approx(1.3));
    CHECK(mid.labor == 0.8);
    CHECK(mid.portfolio == doctest::Approx(1.25));
    // Between the last corner node and y* the corner node is held, not blended with stopped values.
    const Controls held = evaluate(t, 3.2);
    CHECK_FALSE(held.stopped);
    CHECK(held.kappa == 1.4);
    CHECK(held.portfolio == 1.0);
    CHECK(evaluate(t, 0.5).extrapolated);
    std::size_t cursor = 0;
    for (double y : {1.2, 1.3, 2.9, 1.1, 4.5, 0.7}) {
        const Controls a = evaluate(t, y, cursor), b = evaluate(t, y);
        CHECK(a.kappa == b.kappa);
        CHECK(a.portfolio == b.portfolio);
    }
}

TEST_CASE("validation rejects broken tables") {
    PolicyTable t = synthetic();
    t.labor[4] = 0.1;
    CHECK_THROWS_AS(t.validate(), DomainError);
    t = synthetic();
    t.y[2] = 1.5;
    CHECK_THROWS_AS(t.validate(), DomainError);
    t = synthetic();
    t.kappa.pop_back();
    CHECK_THROWS_AS(t.validate(), DomainError);
}

TEST_CASE("closed-form interior labor vanishes at the origin") {
    const auto p = defaults_at_60();
    CHECK(interior_labor_closed_form(1e-9, p) < 1e-6);
    CHECK(interior_labor_closed_form(2e-3, p) == doctest::Approx(2.0 * interior_labor_closed_form(1e-3, p)));
}

TEST_CASE("CSV and JSON round trips are exact") {
    const PolicyTable& t = solved();
    std::ostringstream csv;
    write_csv(t, csv);
    std::istringstream in(csv.str());
    check_identical(t, read_csv(in));
    check_identical(t, from_json(to_json(t)));
    check_identical(synthetic(), from_json(to_json(synthetic())));

    const std::string text = csv.str();
    CHECK(text.find("y,region,kappa_star,b_star,p_star,pi_scaled\n") != std::string::npos);
    CHECK(text.rfind("# ", 0) == 0);

    for (Format f : {Format::Csv, Format::Json}) {
        const std::string path = temp_path(f == Format::Csv ? "policy.csv" : "policy.json");
        export_table(t, path, f);
        check_identical(t, import_table(path));
        std::remove(path.c_str());
    }
    CHECK_THROWS_AS(import_table(temp_path("missing.csv")), IoError);
    CHECK_THROWS_AS(parse_format("xml"), ConfigError);
}

TEST_CASE("pi_scaled column equals p times y") {
    std::ostringstream csv;
    write_csv(solved(), csv);
    std::istringstream in(csv.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'y') continue;
        double y, k, b, p, pi;
        char region[32];
        REQUIRE(std::sscanf(line.c_str(), "%lf,%31[a-z],%lf,%lf,%lf,%lf", &y, region, &k, &b, &p, &pi) == 6);
        CHECK(pi == p * y);
        ++rows;
    }
    CHECK(rows == 400);
}

TEST_CASE("benchmark policy") {
    const PolicyTable& t = solved();
    const PolicyTable b = benchmark_policy(t.y, t.y_star, t.params, t.age);
    for (std::size_t i = 0; i < b.y.size(); ++i) {
        CHECK(b.portfolio[i] == model::merton_weight(t.params));
        CHECK(b.portfolio[i] == doctest::Approx(0.625).epsilon(1e-15));
        CHECK(b.labor[i] == 0.0);
        CHECK(b.kappa[i] >= t.params.prefs.alpha - (b.region[i] == hjb::Region::Stopped ? 1e9 : 0.0));
    }
}
