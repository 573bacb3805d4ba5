#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ipca/distributions.hpp"
#include "ipca/estimators.hpp"

using namespace ipca;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto path = std::filesystem::temp_directory_path() / ("ipca_test_" + name);
    std::ofstream out(path);
    out << contents;
    return path;
}

}  // namespace

TEST_CASE("coordinate distribution parameters") {
    const CoordinateDistribution c{0.2, 0.5, 10};
    CHECK(c.lambda1() == 0.2);
    CHECK(c.lambda2() == doctest::Approx(0.25 * 0.8 / 9.0));
    CHECK_THROWS_AS(CoordinateDistribution({0.0, 0.5, 10}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(CoordinateDistribution({0.2, 1.0, 10}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(CoordinateDistribution({0.2, 0.5, 1}).validate(), std::invalid_argument);
    // p = 0.01, sigma^2 (1-p)/(d-1) = 0.99 * 0.81 > p
    CHECK_THROWS_AS(CoordinateDistribution({0.01, 0.9, 2}).validate(), std::invalid_argument);

    const GroundTruth t = ground_truth(Source{c});
    CHECK(t.v_star == Vector::unit(10, 0));
    CHECK(t.B == 1.0);

    SUBCASE("sigma -> 0 sends lambda2 to 0") {
        CHECK(CoordinateDistribution({0.5, 1e-8, 4}).lambda2() < 1e-16);
    }
}

TEST_CASE("coordinate samples: support, mean and covariance") {
    const CoordinateDistribution c{0.2, 0.5, 10};
    RngStream rng(42, 0);
    const std::int64_t n = 1000000;
    std::vector<double> sum(10, 0.0);
    std::vector<double> sq(10, 0.0);
    for (std::int64_t s = 0; s < n; ++s) {
        const Vector x = sample(c, rng);
        std::size_t nonzero = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            if (x[i] != 0.0) {
                ++nonzero;
                CHECK((std::abs(x[i]) == (i == 0 ? 1.0 : 0.5)));
            }
            sum[i] += x[i];
            sq[i] += x[i] * x[i];
        }
        REQUIRE(nonzero == 1);
    }
    const std::vector<double> var{c.lambda1(), c.lambda2()};
    for (std::size_t i = 0; i < 10; ++i) {
        const double v = i == 0 ? var[0] : var[1];
        const double mean = sum[i] / n;
        CHECK(std::abs(mean) <= 3.0 * std::sqrt(v / n));
        // Var(x_i^2) = E x_i^4 - v^2, E x_i^4 = v * s^2 with s the coordinate scale
        const double s2 = i == 0 ? 1.0 : 0.25;
        const double cov = sq[i] / n;
        CHECK(std::abs(cov - v) <= 3.0 * std::sqrt((v * s2 - v * v) / n));
    }
}

TEST_CASE("gaussian spectrum") {
    CHECK_THROWS_AS(GaussianSpectrum::make({1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianSpectrum::make({1.0, 2.0}), std::invalid_argument);
    const GaussianSpectrum g = GaussianSpectrum::make({2.0, 1.0});
    CHECK(g.clip_radius == 30.0);

    SUBCASE("identity covariance within 0.01 per entry") {
        // eigenvalues must be strictly separated at the top; 1 + 1e-9 is
        // indistinguishable at this sample size.
        const GaussianSpectrum iso = GaussianSpectrum::make({1.0 + 1e-9, 1.0}, {}, 1e6);
        RngStream rng(8, 0);
        double s00 = 0.0, s01 = 0.0, s11 = 0.0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            const Vector x = sample(iso, rng);
            s00 += x[0] * x[0];
            s01 += x[0] * x[1];
            s11 += x[1] * x[1];
        }
        CHECK(std::abs(s00 / n - 1.0) < 0.01);
        CHECK(std::abs(s01 / n) < 0.01);
        CHECK(std::abs(s11 / n - 1.0) < 0.01);
    }
    SUBCASE("rotated ground truth is Q e1") {
        RngStream rng(9, 0);
        const auto Q = random_orthonormal_frame(2, 2, rng);
        const Source s = GaussianSpectrum::make({2.0, 1.0}, Q, 100.0);
        const GroundTruth t = ground_truth(s);
        CHECK(t.lambda1 == 2.0);
        CHECK(t.lambda2 == 1.0);
        CHECK(t.B == 100.0);
        CHECK(potential(t.v_star, Q[0]) < 1e-15);
    }
    SUBCASE("clipping rejects and is counted") {
        const GaussianSpectrum tight = GaussianSpectrum::make({2.0, 1.0}, {}, 1.0);
        RngStream rng(10, 0);
        SampleCounters counters;
        for (int i = 0; i < 1000; ++i) {
            CHECK(norm_squared(sample(Source{tight}, rng, &counters)) <= 1.0);
        }
        CHECK(counters.accepted == 1000);
        CHECK(counters.rejected > 0);
        CHECK(counters.rejection_rate() > 0.0);
    }
}

TEST_CASE("random unit vectors") {
    RngStream rng(12, 0);
    const int n = 1000000;
    std::vector<double> sum(3, 0.0);
    for (int i = 0; i < n; ++i) {
        const Vector v = random_unit_vector(3, rng);
        CHECK(std::abs(norm(v) - 1.0) < 1e-15);
        for (int k = 0; k < 3; ++k) {
            sum[k] += v[k];
        }
    }
    for (double s : sum) {
        CHECK(std::abs(s / n) < 0.005);
    }
}

TEST_CASE("discrete distribution") {
    CHECK_THROWS_AS(DiscreteDistribution({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteDistribution({{1.0}}, {-1.0}), std::invalid_argument);
    const DiscreteDistribution d({{1.0, 0.0}, {0.0, 1.0}}, {3.0, 1.0});
    CHECK(d.probabilities()[0] == 0.75);
    CHECK(d.pick(0.0) == 0);
    CHECK(d.pick(0.74) == 0);
    CHECK(d.pick(0.76) == 1);
    CHECK(d.pick(0.9999999) == 1);
    const GroundTruth t = ground_truth(Source{d});
    CHECK(t.lambda1 == doctest::Approx(0.75));
    CHECK(t.lambda2 == doctest::Approx(0.25));
}

TEST_CASE("dataset stream parsing") {
    const auto path = temp_file("parse.csv",
                                "x0,x1\n"
                                "# comment\n"
                                "\n"
                                "1.0, 2.0\n"
                                "3,4\n");
    DatasetStream s(path, false);
    CHECK(s.dim() == 2);
    auto a = s.next();
    REQUIRE(a);
    CHECK((*a)[1] == 2.0);
    auto b = s.next();
    REQUIRE(b);
    CHECK((*b)[0] == 3.0);
    CHECK_FALSE(s.next());

    DatasetStream centered(path, true);
    auto c = centered.next();
    REQUIRE(c);
    CHECK((*c)[0] == -1.0);
    CHECK((*c)[1] == -1.0);

    const auto bad = temp_file("bad.csv", "1,2\n3,x\n");
    DatasetStream sb(bad, false);
    CHECK(sb.next());
    try {
        (void)sb.next();
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }

    const auto ragged = temp_file("ragged.csv", "1,2\n3\n");
    DatasetStream sr(ragged, false);
    CHECK(sr.next());
    CHECK_THROWS_AS(sr.next(), ParseError);
}

TEST_CASE("empirical ground truth") {
    SUBCASE("exact multiplicities reproduce the analytic target") {
        // p = 0.2, sigma = 0.5, d = 10: 9 copies of each of +-e1 and 4 of
        // each +-sigma e_i gives weights 18/90 and 8/90 = (1-p)/(d-1).
        std::ostringstream csv;
        auto row = [&](std::size_t axis, double value) {
            for (std::size_t i = 0; i < 10; ++i) {
                csv << (i ? "," : "") << (i == axis ? value : 0.0);
            }
            csv << '\n';
        };
        for (int k = 0; k < 9; ++k) {
            row(0, 1.0);
            row(0, -1.0);
        }
        for (std::size_t axis = 1; axis < 10; ++axis) {
            for (int k = 0; k < 4; ++k) {
                row(axis, 0.5);
                row(axis, -0.5);
            }
        }
        const auto path = temp_file("multiplicity.csv", csv.str());
        DatasetStream s(path, true);
        const EmpiricalGroundTruth eg = empirical_ground_truth(s);
        const GroundTruth t = ground_truth(Source{CoordinateDistribution{0.2, 0.5, 10}});
        CHECK(eg.records == 90);
        CHECK(eg.passes_used <= 2);
        CHECK_FALSE(eg.degenerate_gap);
        CHECK(std::abs(eg.truth.lambda1 - t.lambda1) < 1e-10);
        CHECK(std::abs(eg.truth.lambda2 - t.lambda2) < 1e-10);
        // eigenvector residual tolerance 1e-10 allows an angle of about 1e-10
        CHECK(potential(eg.truth.v_star, t.v_star) < 1e-18);
        CHECK(eg.truth.B == 1.0);
    }
    SUBCASE("single repeated record") {
        const auto path = temp_file("repeat.csv", "1,2,2\n1,2,2\n1,2,2\n");
        DatasetStream s(path, false);
        const EmpiricalGroundTruth eg = empirical_ground_truth(s);
        CHECK(eg.truth.lambda1 == doctest::Approx(9.0));
        CHECK(eg.truth.lambda2 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(eg.degenerate_gap);
        CHECK(eg.rank_deficient);
    }
    SUBCASE("empty stream") {
        const auto path = temp_file("empty.csv", "# nothing\n");
        DatasetStream s(path, false, 3);
        CHECK_THROWS(empirical_ground_truth(s));
    }
    SUBCASE("pass budget") {
        const auto path = temp_file("budget.csv", "1,0\n0,1\n");
        DatasetStream s(path, false);
        CHECK_THROWS_AS(empirical_ground_truth(s, 1), std::invalid_argument);
    }
}

TEST_CASE("ground-truth cache round trip") {
    GroundTruth t{Vector{0.6, 0.8}, 2.0, 0.5, 3.0};
    std::stringstream buf;
    write_ground_truth_csv(buf, t);
    const GroundTruth back = read_ground_truth_csv(buf);
    CHECK(back.v_star == t.v_star);
    CHECK(back.lambda1 == 2.0);
    CHECK(back.lambda2 == 0.5);
    CHECK(back.B == 3.0);

    std::stringstream bad("lambda1,lambda2,B,v0\n1,2,1,1\n");
    CHECK_THROWS_AS(read_ground_truth_csv(bad), std::invalid_argument);
}
