#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipca/estimators.hpp"

namespace ipca::theory {

// Step counts below are doubles holding integral values: the epoch ladder
// multiplies n by e^{5/c_o} per epoch and leaves the int64 range for
// realistic parameters. Values beyond 2^53 are integral but not exact.

struct Epoch {
    std::size_t j = 0;
    double n = 0.0;
    double eps = 0.0;
};

/// The (n_j, eps_j) ladder: eps_0 = delta^2/(8ed) doubling up to 1/4 (with
/// at most a few factors in [3/2, 2) just below 1/4 when doubling does
/// not land exactly), then eps_J = 1/2; n_{j+1} + 1 = ceil(e^{5/c_o}(n_j + 1)).
struct EpochSchedule {
    std::vector<Epoch> epochs;  // j = 0..J
    std::size_t J = 0;
    double delta = 0.0;
    std::size_t d = 0;
    double c_o = 0.0;
    double c = 0.0;
    double B = 0.0;
    double n_o_min = 0.0;  // ceil((20 c^2 B^2 / eps_0^2) ln(4/delta))

    double growth() const;  // e^{5/c_o}
};

double epoch_eps0(double delta, std::size_t d);
double epoch_min_start(double c, double B, double eps0, double delta);

/// Throws std::invalid_argument outside 0<delta<1, d>=3, c_o>0, c>0, B>0,
/// or when eps_0 >= 1/2. `n_o` defaults to (and is raised to) n_o_min.
EpochSchedule epoch_schedule(double delta, std::size_t d, double c_o, double c, double B,
                             std::optional<double> n_o = std::nullopt);

struct ScheduleAudit {
    bool ok = true;
    std::vector<std::string> failures;
    std::size_t checks = 0;
};

/// Re-checks every inequality of the epoch conditions on a finished
/// schedule, plus the implication from the start-time prescription of
/// the main theorem to the epoch start-time requirement.
ScheduleAudit audit_schedule(const EpochSchedule& schedule);

struct BoundParams {
    double c_o = 4.0;
    double c = 1.0;
    double B = 1.0;
    std::size_t d = 3;
    double delta = 0.25;
    double n_o = 0.0;
    std::optional<double> lambda1;
    std::optional<double> lambda2;

    /// c = c_o / (2 (lambda1 - lambda2)).
    static BoundParams from_gap(double c_o, double lambda1, double lambda2, double B,
                                std::size_t d, double delta, double n_o);
    double a() const { return c_o / 2.0; }
    double b() const { return c * c * B * B / 4.0; }
    void validate() const;
};

/// n_J with n_J + 1 = (n_o + 1)(4ed/delta^2)^{5/(c_o ln 2)}, the closed-form
/// end of the last epoch used by the final-epoch bound.
double final_epoch_start(const BoundParams& params);

/// Upper bound on E_n[Psi_n] for the Krasulina estimator:
///   (1/2)((n_o+1)/(n+1))^a (4ed/delta^2)^{5/(2 ln 2)} + tail(n)
/// with a = c_o/2, b = c^2 B^2/4 and
///   tail = b/(a-1) exp((a+1)/(n_J+1)) / (n+1)      for a > 1,
///   tail = 4 b zeta(2-a) / (n+1)^a                  for a < 1.
/// Throws for a == 1 (c_o == 2) and for n < n_J.
double krasulina_bound(const BoundParams& params, double n);

/// The constants of the main theorem realized by the explicit bound.
struct RateBoundConstants {
    double A1 = 0.0;          // (1/2)(4e)^a
    double a_exponent = 0.0;  // 5/(2 ln 2)
    double A_o = 0.0;         // start-time constant; depends on delta
};

RateBoundConstants rate_bound_constants(double delta);

/// ceil((A_o B^2 c^2 d^2 / delta^4) ln(1/delta)).
double rate_bound_min_start(double c, double B, std::size_t d, double delta);

/// Closed-form upper bound for u_t <= (1 - a/t) u_{t-1} + b/t^2, t > t0.
/// Throws for a == 1 or a <= 0, b < 0, t < t0.
double solve_recurrence(double u_t0, std::int64_t t0, double a, double b, std::int64_t t);

/// Riemann zeta for s > 1 (Euler-Maclaurin, absolute error < 1e-12).
double zeta(double s);

/// e^t sqrt((d-1)/(2t)), the bound on E exp(tY) for Y = 1 - V_1^2, V uniform.
double mgf_bound(std::size_t d, double t);

struct AlwaysGoodBound {
    double eps = 0.0;
    double probability = 0.0;  // sqrt(2 e eps)
    bool vacuous = false;      // probability >= 1

    /// ceil(2 B^2 c^2 d^2 / eps^2).
    double min_start(double B, double c, std::size_t d) const;
};

AlwaysGoodBound always_good_bound(double eps);

/// (d-1) / n^{2c(lambda1-lambda2)}.
double heuristic_rate(double c, double lambda1, double lambda2, std::size_t d, double n);

/// gamma^2 B^2 / 4 (Krasulina) or 5 gamma^2 B^2 + 2 gamma^3 B^3 (Oja).
double beta_step(Rule rule, double gamma, double B);

}  // namespace ipca::theory
