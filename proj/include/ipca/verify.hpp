#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipca/distributions.hpp"
#include "ipca/estimators.hpp"
#include "ipca/linalg.hpp"
#include "ipca/rng.hpp"

namespace ipca::verify {

enum class Sidedness {
    two_sided,  // |empirical - reference| <= 3 se + slack
    upper,      // empirical <= reference + 3 se + slack
    lower,      // empirical >= reference - 3 se - slack
};

struct CheckReport {
    std::string name;
    std::int64_t n_samples = 0;
    double empirical = 0.0;
    double reference = 0.0;
    double std_error = 0.0;
    bool pass = false;
    double slack_used = 0.0;
    Sidedness sidedness = Sidedness::two_sided;
    bool vacuous = false;  // the reference bound says nothing; passes automatically
    std::string detail;
};

/// Fills in `pass` from the other fields.
CheckReport judge(CheckReport report);

/// "name,n_samples,empirical,reference,std_error,pass,slack"
std::string csv_header();
std::string csv_row(const CheckReport& report);

/// `n` points log-spaced on [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Monte Carlo mean of xi(v, X) against A v - G(v) v, coordinate by
/// coordinate. The report carries the coordinate with the largest
/// standardized deviation.
CheckReport check_xi_expectation(const Source& source, const Vector& v, std::int64_t n_samples,
                                 RngStream& rng);

/// Monte Carlo mean of Z against 2 gamma (v^.v*)^2 (lambda1 - G(v)); also
/// requires the empirical mean to clear 2 gamma (lambda1-lambda2) Psi (1-Psi)
/// from below.
CheckReport check_z_expectation(const Source& source, const Vector& v, double gamma,
                                std::int64_t n_samples, RngStream& rng);

/// What one update did, with every pathwise property evaluated.
struct StepAudit {
    double psi_before = 0.0;
    double psi_after = 0.0;
    double z = 0.0;
    double beta = 0.0;
    double xi_norm_squared = 0.0;
    std::vector<std::string> violations;
};

/// Applies one `rule` update to v with step gamma and checks it. Oja
/// expects a unit v. `renormalized` tells the Krasulina norm check that a
/// rescale happened in between.
StepAudit audit_step(Rule rule, const Vector& v, const Vector& v_next, const Vector& x,
                     double gamma, const Vector& v_star, double B, bool renormalized = false);

struct PathwiseConfig {
    Rule rule = Rule::oja;
    double c = 1.0;
    InitSpec init;
    std::int64_t n_o = 0;
    std::int64_t steps = 1000;
    std::size_t trials = 10;
};

/// Full trajectories with audit_step after every step. Counts violations;
/// the first one is serialized (step, gamma, v, x, Psi values) into detail.
CheckReport check_pathwise(const Source& source, const PathwiseConfig& config, RngStream& rng);

/// E exp(t (1 - V_1^2)) for V uniform on the sphere against e^t sqrt((d-1)/(2t)).
/// Flagged vacuous when the bound is not below the trivial e^t.
CheckReport check_mgf(std::size_t d, double t, std::int64_t n_samples, RngStream& rng);

/// E Psi of a uniform random unit vector against 1 - 1/d.
CheckReport check_initial_potential(std::size_t d, std::int64_t n_samples, RngStream& rng);

/// ln Gamma(z + 1/2) - ln Gamma(z) - (1/2) ln z <= 0 on every grid point,
/// up to the rounding of the three terms.
CheckReport check_gamma_inequality(const std::vector<double>& z_grid);

struct AlwaysGoodConfig {
    Rule rule = Rule::krasulina;
    double c = 1.0;
    double eps = 0.05;
    std::int64_t horizon = 0;  // 0 means 10 n_o
    std::size_t trials = 500;
};

/// Fraction of trials with max_{n_o <= n <= horizon} Psi_n >= 1 - eps/d,
/// starting from a random unit vector at n_o = ceil(2 B^2 c^2 d^2 / eps^2),
/// against sqrt(2 e eps).
CheckReport check_always_good(const Source& source, const AlwaysGoodConfig& config,
                              RngStream& rng);

/// Max over random v (uniform direction, radius in [0.5, 2]) of
/// ||grad - central difference|| / max(||grad||, 0.01),
/// so gradients near zero are held to an absolute 1e-8. Reference 1e-6.
CheckReport check_gradient(const SymMatrix& A, std::size_t n_points, double h, RngStream& rng);

/// As check_gradient, with a fresh A = diag(U[0.1, 2]) for every draw.
CheckReport check_gradient_random_diagonal(std::size_t d, std::size_t n_draws, double h,
                                           RngStream& rng);

struct SuiteScale {
    std::int64_t expectation_samples = 100000;
    std::size_t expectation_vectors = 20;
    std::int64_t pathwise_steps = 25000;
    std::size_t pathwise_trials = 5;  // per (rule, c, init) combination
    std::int64_t mgf_samples = 1000000;
    std::size_t always_good_trials = 500;
    std::size_t gradient_draws = 1000;

    static SuiteScale quick();
};

/// Every check above on the standard configurations, in a fixed order.
std::vector<CheckReport> run_suite(std::uint64_t seed, const SuiteScale& scale);

}  // namespace ipca::verify
