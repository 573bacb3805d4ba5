#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ipca/rng.hpp"
#include "ipca/theory.hpp"

using namespace ipca;
using namespace ipca::theory;

TEST_CASE("epoch ladder for delta = 0.1, d = 10") {
    const EpochSchedule s = epoch_schedule(0.1, 10, 4.0, 1.0, 1.0);
    CHECK(s.epochs[0].eps == doctest::Approx(4.598493014643029e-5).epsilon(1e-14));
    CHECK(s.J == 14);
    CHECK(s.growth() == doctest::Approx(3.4903429574618414).epsilon(1e-14));
    CHECK(s.epochs[s.J].eps == 0.5);
    CHECK(s.epochs[s.J - 1].eps == 0.25);
    // independent Python evaluation
    CHECK(s.n_o_min == 34889391653.0);
    CHECK(s.epochs[0].n == 34889391653.0);
    CHECK(s.epochs[1].n == 121775942449.0);
    CHECK(s.epochs[2].n == 425039803118.0);
    CHECK(s.epochs[3].n == 1483534683457.0);
    const ScheduleAudit audit = audit_schedule(s);
    CHECK(audit.ok);
    CHECK(audit.failures.empty());
}

TEST_CASE("epoch ladder audit over a parameter grid") {
    for (double delta : {0.01, 0.05, 0.1, 0.25, 0.3, 0.5, 0.9, 0.99}) {
        for (std::size_t d : {3u, 4u, 7u, 10u, 50u, 1000u}) {
            for (double c_o : {0.5, 3.0, 4.0, 10.0}) {
                const EpochSchedule s = epoch_schedule(delta, d, c_o, 1.3, 0.7);
                const ScheduleAudit a = audit_schedule(s);
                INFO("delta=" << delta << " d=" << d << " c_o=" << c_o);
                CHECK(a.ok);
                CHECK(s.epochs[s.J - 1].eps == 0.25);
                for (std::size_t j = 1; j <= s.J; ++j) {
                    CHECK(s.epochs[j].n > s.epochs[j - 1].n);
                }
            }
        }
    }
}

TEST_CASE("epoch ladder: explicit start and failures") {
    const EpochSchedule raised = epoch_schedule(0.25, 3, 4.0, 1.0, 1.0, 1e12);
    CHECK(raised.epochs[0].n == 1e12);
    const EpochSchedule floor = epoch_schedule(0.25, 3, 4.0, 1.0, 1.0, 5.0);
    CHECK(floor.epochs[0].n == floor.n_o_min);

    CHECK_THROWS_AS(epoch_schedule(0.0, 10, 4.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(epoch_schedule(1.0, 10, 4.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(epoch_schedule(0.1, 2, 4.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(epoch_schedule(0.1, 10, 0.0, 1.0, 1.0), std::invalid_argument);

    SUBCASE("tampering is caught") {
        EpochSchedule s = epoch_schedule(0.1, 10, 4.0, 1.0, 1.0);
        s.epochs[5].eps *= 1.01;
        CHECK_FALSE(audit_schedule(s).ok);
        EpochSchedule t = epoch_schedule(0.1, 10, 4.0, 1.0, 1.0);
        t.epochs[3].n -= 1e6;
        CHECK_FALSE(audit_schedule(t).ok);
        EpochSchedule u = epoch_schedule(0.1, 10, 4.0, 1.0, 1.0);
        u.epochs[0].n = 10.0;
        CHECK_FALSE(audit_schedule(u).ok);
    }
}

TEST_CASE("krasulina bound") {
    BoundParams p;
    p.c_o = 4.0;
    p.c = 1.0;
    p.B = 1.0;
    p.n_o = 1000.0;
    p.delta = 0.25;
    p.d = 10;
    // mpmath, 40 digits
    CHECK(final_epoch_start(p) == doctest::Approx(698561443.42083347).epsilon(1e-12));
    CHECK(krasulina_bound(p, 1e9) == doctest::Approx(0.24399404557767251).epsilon(1e-12));

    SUBCASE("a < 1 branch") {
        BoundParams q = p;
        q.c_o = 1.0;
        // n_J = 2.374e26 here
        CHECK(krasulina_bound(q, 1e30) == doctest::Approx(0.0077042099993757711).epsilon(1e-11));
        CHECK_THROWS_AS(krasulina_bound(q, 1e20), std::invalid_argument);
    }
    SUBCASE("c_o = 2 is rejected") {
        BoundParams q = p;
        q.c_o = 2.0;
        CHECK_THROWS_AS(krasulina_bound(q, 1e9), std::invalid_argument);
    }
    SUBCASE("decreasing past n_J and (n+1) bound converges") {
        const double nJ = final_epoch_start(p);
        double last = krasulina_bound(p, nJ);
        for (double n = nJ * 2; n < 1e30; n *= 2) {
            const double b = krasulina_bound(p, n);
            CHECK(b < last);
            last = b;
        }
        const double a = p.a();
        const double limit = p.b() / (a - 1.0) * std::exp((a + 1.0) / (nJ + 1.0));
        CHECK((1e40 + 1.0) * krasulina_bound(p, 1e40) == doctest::Approx(limit).epsilon(1e-12));
    }
    SUBCASE("parameter checks") {
        CHECK_THROWS_AS(krasulina_bound(p, 10.0), std::invalid_argument);
        CHECK_THROWS_AS(krasulina_bound(p, 6e8), std::invalid_argument);
        BoundParams q = p;
        q.lambda1 = 0.5;
        q.lambda2 = 0.25;
        CHECK_THROWS_AS(q.validate(), std::invalid_argument);  // c != c_o/(2 gap) = 8
        const BoundParams r = BoundParams::from_gap(4.0, 0.5, 0.25, 1.0, 10, 0.25, 1000.0);
        CHECK(r.c == doctest::Approx(8.0));
        CHECK_THROWS_AS(BoundParams::from_gap(4.0, 0.25, 0.5, 1.0, 10, 0.25, 1000.0),
                        std::invalid_argument);
    }
}

TEST_CASE("main theorem constants") {
    const RateBoundConstants k = rate_bound_constants(0.1);
    CHECK(k.A1 == doctest::Approx(2734.1897581559531).epsilon(1e-13));
    CHECK(k.a_exponent == doctest::Approx(3.6067376022224085).epsilon(1e-14));
    CHECK(k.a_exponent > 1.0);
    CHECK(k.a_exponent < 4.0);
    CHECK(k.A_o == doctest::Approx(15152.270271711571).epsilon(1e-13));
    // A_o depends on delta
    CHECK(rate_bound_constants(0.01).A_o != doctest::Approx(k.A_o));

    for (double delta : {0.01, 0.1, 0.25, 0.5}) {
        for (std::size_t d : {3u, 10u, 100u}) {
            const double eps0 = epoch_eps0(delta, d);
            // equal in exact arithmetic; the two roundings may differ by an ulp
            CHECK(rate_bound_min_start(2.0, 1.5, d, delta) >=
                  epoch_min_start(2.0, 1.5, eps0, delta) * (1.0 - 1e-14));
        }
    }
}

TEST_CASE("recurrence solution") {
    // mpmath: (11/101)^2 0.5 + (12/11)^3 / 101
    CHECK(solve_recurrence(0.5, 10, 2.0, 1.0, 100) ==
          doctest::Approx(0.018784969078693321).epsilon(1e-14));
    CHECK(solve_recurrence(0.5, 10, 2.0, 0.0, 100) ==
          doctest::Approx(std::pow(11.0 / 101.0, 2) * 0.5).epsilon(1e-15));
    CHECK_THROWS_AS(solve_recurrence(0.5, 10, 1.0, 1.0, 100), std::invalid_argument);
    CHECK_THROWS_AS(solve_recurrence(0.5, 10, 2.0, 1.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(solve_recurrence(0.5, 10, -1.0, 1.0, 50), std::invalid_argument);

    SUBCASE("dominates brute-force iteration") {
        RngStream rng(21, 0);
        for (int i = 0; i < 300; ++i) {
            const bool big = i % 2 == 0;
            const double a = big ? 1.05 + 3.0 * rng.uniform() : 0.05 + 0.9 * rng.uniform();
            const double b = 2.0 * rng.uniform();
            const auto t0 = static_cast<std::int64_t>(std::ceil(a)) +
                            static_cast<std::int64_t>(rng.uniform() * 50.0);
            const double u0 = rng.uniform();
            double u = u0;
            for (std::int64_t t = t0 + 1; t <= t0 + 2000; ++t) {
                const double td = static_cast<double>(t);
                u = (1.0 - a / td) * u + b / (td * td);
                if (t % 97 == 0 || t == t0 + 2000) {
                    CHECK(u <= solve_recurrence(u0, t0, a, b, t) * (1.0 + 1e-12));
                }
            }
        }
    }
}

TEST_CASE("zeta") {
    // mpmath
    CHECK(zeta(1.01) == doctest::Approx(100.57794333849678).epsilon(1e-13));
    CHECK(zeta(1.1) == doctest::Approx(10.584448464950801).epsilon(1e-13));
    CHECK(zeta(1.5) == doctest::Approx(2.6123753486854883).epsilon(1e-13));
    CHECK(zeta(2.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0).epsilon(1e-14));
    CHECK(zeta(3.0) == doctest::Approx(1.2020569031595943).epsilon(1e-14));
    CHECK(zeta(7.5) == doctest::Approx(1.0058267275365228).epsilon(1e-14));
    CHECK_THROWS_AS(zeta(1.0), std::invalid_argument);
}

TEST_CASE("small closed forms") {
    CHECK(mgf_bound(10, 5.0) == doctest::Approx(140.79708525152801).epsilon(1e-14));
    CHECK(mgf_bound(3, 1.0) == doctest::Approx(std::numbers::e).epsilon(1e-15));
    for (std::size_t d = 3; d < 30; ++d) {
        CHECK(mgf_bound(d + 1, 2.0) > mgf_bound(d, 2.0));
    }
    CHECK_THROWS_AS(mgf_bound(2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(mgf_bound(5, 0.0), std::invalid_argument);

    const AlwaysGoodBound g = always_good_bound(0.05);
    CHECK(g.probability == doctest::Approx(0.52137144421794384).epsilon(1e-14));
    CHECK_FALSE(g.vacuous);
    CHECK(g.min_start(1.0, 1.0, 3) == 7200.0);
    CHECK(always_good_bound(1.0 / (2.0 * std::numbers::e)).vacuous);
    CHECK(always_good_bound(0.5).probability == doctest::Approx(std::sqrt(std::numbers::e)));
    CHECK_THROWS_AS(always_good_bound(0.0), std::invalid_argument);

    // c (l1 - l2) = 0.25
    CHECK(heuristic_rate(0.25, 1.5, 0.5, 10, 100.0) == doctest::Approx(0.9));
    CHECK(heuristic_rate(3.0, 1.0, 0.2, 10, 1.0) == 9.0);

    CHECK(beta_step(Rule::krasulina, 0.1, 1.0) == doctest::Approx(0.0025));
    CHECK(beta_step(Rule::oja, 0.1, 1.0) == doctest::Approx(0.052));
    CHECK(beta_step(Rule::oja, 0.0, 1.0) == 0.0);
    CHECK(beta_step(Rule::krasulina, 0.0, 1.0) == 0.0);
}
