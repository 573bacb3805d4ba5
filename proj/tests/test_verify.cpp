#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ipca/verify.hpp"

using namespace ipca;
using namespace ipca::verify;

TEST_CASE("judge") {
    CheckReport r;
    r.empirical = 1.0;
    r.reference = 1.2;
    r.std_error = 0.1;
    r.sidedness = Sidedness::two_sided;
    CHECK(judge(r).pass);
    r.reference = 1.31;
    CHECK_FALSE(judge(r).pass);
    r.sidedness = Sidedness::upper;
    CHECK(judge(r).pass);
    r.sidedness = Sidedness::lower;
    CHECK_FALSE(judge(r).pass);
    r.vacuous = true;
    CHECK(judge(r).pass);

    CHECK(csv_header() == "name,n_samples,empirical,reference,std_error,pass,slack");
    CheckReport s;
    s.name = "x";
    s.n_samples = 3;
    s.empirical = 0.5;
    s.pass = true;
    CHECK(csv_row(s) == "x,3,0.5,0,0,1,0");
}

TEST_CASE("log grid") {
    const auto g = log_grid(1e-3, 1e6, 10);
    CHECK(g.front() == 1e-3);
    CHECK(g.back() == 1e6);
    CHECK(g[1] / g[0] == doctest::Approx(10.0));
    CHECK_THROWS_AS(log_grid(0.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("xi expectation") {
    const Source coord = CoordinateDistribution{0.2, 0.5, 10};
    SUBCASE("v = v* has reference zero") {
        RngStream rng(1, 0);
        const CheckReport r = check_xi_expectation(coord, Vector::unit(10, 0), 1000, rng);
        CHECK(r.reference == 0.0);
        CHECK(r.pass);
    }
    SUBCASE("single support point is exact after one sample") {
        const Source point = DiscreteDistribution::uniform_over({{0.6, 0.8, 0.0}});
        RngStream rng(2, 0);
        const CheckReport r = check_xi_expectation(point, {1.0, 2.0, 3.0}, 1, rng);
        CHECK(r.std_error == 0.0);
        CHECK(r.pass);
        CHECK(std::abs(r.empirical - r.reference) <= r.slack_used);
    }
    SUBCASE("random v at 1e5 samples") {
        RngStream rng(3, 0);
        const Vector v = random_unit_vector(10, rng);
        CHECK(check_xi_expectation(coord, v, 100000, rng).pass);
    }
}

TEST_CASE("Z expectation") {
    const Source coord = CoordinateDistribution{0.2, 0.5, 10};
    RngStream rng(4, 0);
    const CheckReport at = check_z_expectation(coord, Vector::unit(10, 0), 0.1, 1000, rng);
    CHECK(at.reference == 0.0);
    CHECK(at.pass);
    const CheckReport perp = check_z_expectation(coord, Vector::unit(10, 3), 0.1, 1000, rng);
    CHECK(perp.reference == 0.0);
    CHECK(perp.pass);
    const Vector v = random_unit_vector(10, rng);
    CHECK(check_z_expectation(coord, v, 0.1, 100000, rng).pass);
}

TEST_CASE("step audit on hand examples") {
    const Vector e1{1.0, 0.0};
    SUBCASE("orthogonal input") {
        const Vector v = e1;
        const Vector x{0.0, 1.0};
        const StepAudit a = audit_step(Rule::krasulina, v, krasulina_update(v, x, 0.1), x, 0.1,
                                       e1, 1.0);
        CHECK(a.violations.empty());
        CHECK(a.psi_after == a.psi_before);
        CHECK(a.z == 0.0);
    }
    SUBCASE("V = (1,1), x = e1, gamma = 0.1") {
        const Vector v{1.0, 1.0};
        const Vector next = krasulina_update(v, e1, 0.1);
        const StepAudit a = audit_step(Rule::krasulina, v, next, e1, 0.1, e1, 1.0);
        CHECK(a.violations.empty());
        CHECK(a.psi_before == doctest::Approx(0.5));
        // mpmath: 0.95^2 / (1.05^2 + 0.95^2)
        CHECK(a.psi_after == doctest::Approx(0.45012468827930175).epsilon(1e-14));
        CHECK(a.z == doctest::Approx(0.05));
        CHECK(a.beta == doctest::Approx(0.0025));
        CHECK(a.psi_after <= a.psi_before + a.beta - a.z);
    }
    SUBCASE("a corrupted update is reported") {
        const Vector v{1.0, 1.0};
        const StepAudit a = audit_step(Rule::krasulina, v, {0.1, 1.0, }, e1, 0.1, e1, 1.0);
        CHECK_FALSE(a.violations.empty());
        const Vector u = normalized(v);
        const StepAudit b = audit_step(Rule::oja, u, {2.0, 0.0}, e1, 0.1, e1, 1.0);
        CHECK_FALSE(b.violations.empty());
    }
}

TEST_CASE("pathwise check") {
    const Source coord = CoordinateDistribution{0.2, 0.5, 10};
    for (Rule rule : {Rule::krasulina, Rule::oja}) {
        PathwiseConfig cfg;
        cfg.rule = rule;
        cfg.c = 5.0;
        cfg.steps = 3000;
        cfg.trials = 3;
        RngStream a(5, 0);
        RngStream b(5, 0);
        const CheckReport r1 = check_pathwise(coord, cfg, a);
        const CheckReport r2 = check_pathwise(coord, cfg, b);
        CHECK(r1.pass);
        CHECK(r1.n_samples == 9000);
        CHECK(csv_row(r1) == csv_row(r2));
    }
}

TEST_CASE("mgf and initial potential") {
    RngStream rng(6, 0);
    const CheckReport m = check_mgf(10, 5.0, 100000, rng);
    CHECK(m.pass);
    CHECK(m.reference == doctest::Approx(140.797085).epsilon(1e-6));
    CHECK_FALSE(m.vacuous);
    const CheckReport small = check_mgf(10, 1e-3, 10000, rng);
    CHECK(small.vacuous);
    CHECK(small.empirical == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(check_mgf(3, 1.0, 100000, rng).empirical <= std::numbers::e);
    CHECK(check_initial_potential(10, 100000, rng).pass);
}

TEST_CASE("gamma inequality") {
    CHECK(std::exp(std::lgamma(1.5)) == doctest::Approx(0.886227).epsilon(1e-6));
    CHECK(std::sqrt(0.5) * std::exp(std::lgamma(0.5)) == doctest::Approx(1.25331).epsilon(1e-5));
    const CheckReport r = check_gamma_inequality(log_grid(1e-3, 1e6, 300));
    CHECK(r.pass);
    const CheckReport big = check_gamma_inequality({1e6});
    CHECK(big.empirical < 0.0);
    CHECK(big.empirical == doctest::Approx(-1.0 / 8e6).epsilon(1e-3));
}

TEST_CASE("always-good check") {
    const Source d3 = CoordinateDistribution{0.5, 0.5, 3};
    AlwaysGoodConfig cfg;
    cfg.eps = 0.5;
    cfg.trials = 5;
    RngStream rng(7, 0);
    const CheckReport v = check_always_good(d3, cfg, rng);
    CHECK(v.vacuous);
    CHECK(v.pass);
    CHECK(v.reference == doctest::Approx(std::sqrt(std::numbers::e)));

    AlwaysGoodConfig short_h;
    short_h.horizon = 100;
    CHECK_THROWS_AS(check_always_good(d3, short_h, rng), std::invalid_argument);
}

TEST_CASE("gradient check") {
    RngStream rng(8, 0);
    const std::vector<double> diag{2.0, 1.0};
    CHECK(check_gradient(SymMatrix::diagonal(diag), 200, 1e-5, rng).pass);
    CHECK(check_gradient_random_diagonal(6, 200, 1e-5, rng).pass);
}

TEST_CASE("quick suite is reproducible") {
    const auto a = run_suite(99, SuiteScale::quick());
    const auto b = run_suite(99, SuiteScale::quick());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(csv_row(a[i]) == csv_row(b[i]));
    }
}
