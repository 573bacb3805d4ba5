#include "ipca/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace ipca::theory {

using std::numbers::e;

double EpochSchedule::growth() const { return std::exp(5.0 / c_o); }

double epoch_eps0(double delta, std::size_t d) {
    return delta * delta / (8.0 * e * static_cast<double>(d));
}

double epoch_min_start(double c, double B, double eps0, double delta) {
    return std::ceil(20.0 * c * c * B * B / (eps0 * eps0) * std::log(4.0 / delta));
}

namespace {

// Ratios inside [3/2, 2] for the flexible part of the ladder keep this
// much room above 3/2 so rounding cannot push an audited ratio below it.
constexpr double kFlexMargin = 1e-12;

std::vector<double> eps_ladder(double eps0) {
    if (!(eps0 < 0.5)) {
        throw std::invalid_argument("epoch_schedule: eps_0 >= 1/2, delta too large for d");
    }
    std::size_t K = 0;
    double reach = eps0;
    while (reach < 0.25) {
        reach *= 2.0;
        ++K;
    }
    std::vector<double> eps{eps0};
    if (reach == 0.25) {
        for (std::size_t j = 1; j <= K; ++j) {
            eps.push_back(eps.back() * 2.0);
        }
    } else {
        // eps_{J-1} must be exactly 1/4 (it is <= 1/4 and eps_J = 1/2 <= 2 eps_{J-1}),
        // so the K steps from eps_0 to 1/4 use as many doublings as possible and
        // split the remainder evenly into factors in [3/2, 2).
        std::optional<std::size_t> doublings;
        double factor = 0.0;
        for (std::size_t m = K; m-- > 0;) {
            const double f = std::pow(0.25 / (eps0 * std::exp2(static_cast<double>(m))),
                                      1.0 / static_cast<double>(K - m));
            if (f >= 1.5 * (1.0 + kFlexMargin)) {
                doublings = m;
                factor = f;
                break;
            }
        }
        if (!doublings) {
            throw std::invalid_argument("epoch_schedule: no admissible eps ladder for this eps_0");
        }
        for (std::size_t j = 1; j <= *doublings; ++j) {
            eps.push_back(eps.back() * 2.0);
        }
        for (std::size_t j = *doublings + 1; j < K; ++j) {
            eps.push_back(eps.back() * factor);
        }
        eps.push_back(0.25);
    }
    if (eps.size() == 1 && eps0 != 0.25) {
        throw std::invalid_argument("epoch_schedule: no admissible eps ladder for this eps_0");
    }
    eps.push_back(0.5);
    return eps;
}

}  // namespace

EpochSchedule epoch_schedule(double delta, std::size_t d, double c_o, double c, double B,
                             std::optional<double> n_o) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("epoch_schedule: delta must lie in (0,1)");
    }
    if (d < 3) {
        throw std::invalid_argument("epoch_schedule: d must be >= 3");
    }
    if (!(c_o > 0.0) || !(c > 0.0) || !(B > 0.0)) {
        throw std::invalid_argument("epoch_schedule: c_o, c and B must be positive");
    }
    EpochSchedule s;
    s.delta = delta;
    s.d = d;
    s.c_o = c_o;
    s.c = c;
    s.B = B;
    const double eps0 = epoch_eps0(delta, d);
    const std::vector<double> eps = eps_ladder(eps0);
    s.n_o_min = epoch_min_start(c, B, eps0, delta);
    s.J = eps.size() - 1;

    const double g = s.growth();
    double n = std::max(std::ceil(n_o.value_or(0.0)), s.n_o_min);
    for (std::size_t j = 0; j < eps.size(); ++j) {
        if (j > 0) {
            const double target = g * (n + 1.0);
            n = std::ceil(target) - 1.0;
            // Past 2^53 the subtraction can round below the target.
            while (n + 1.0 < target) {
                n = std::nextafter(n, std::numeric_limits<double>::infinity());
            }
        }
        s.epochs.push_back({j, n, eps[j]});
    }
    return s;
}

ScheduleAudit audit_schedule(const EpochSchedule& s) {
    ScheduleAudit audit;
    auto check = [&](bool ok, std::string what) {
        ++audit.checks;
        if (!ok) {
            audit.ok = false;
            audit.failures.push_back(std::move(what));
        }
    };
    check(s.epochs.size() == s.J + 1 && s.J >= 1, "ladder has J+1 entries");
    if (s.epochs.size() != s.J + 1 || s.J < 1) {
        return audit;
    }
    const double eps0 = epoch_eps0(s.delta, s.d);
    check(s.epochs[0].eps == eps0, "eps_0 = delta^2/(8ed)");
    for (std::size_t j = 0; j < s.J; ++j) {
        const double lo = 1.5 * s.epochs[j].eps;
        const double hi = 2.0 * s.epochs[j].eps;
        const double next = s.epochs[j + 1].eps;
        check(lo <= next && next <= hi, fmt::format("3/2 eps_{0} <= eps_{1} <= 2 eps_{0}", j, j + 1));
        check(s.epochs[j + 1].n + 1.0 >= s.growth() * (s.epochs[j].n + 1.0),
              fmt::format("(n_{1}+1) >= e^(5/c_o) (n_{0}+1)", j, j + 1));
    }
    check(s.epochs[s.J - 1].eps <= 0.25, "eps_{J-1} <= 1/4");
    check(s.epochs[s.J].eps == 0.5, "eps_J = 1/2");
    for (const Epoch& ep : s.epochs) {
        check(std::floor(ep.n) == ep.n && ep.n >= 0.0, fmt::format("n_{} is a whole number", ep.j));
    }
    const double required = epoch_min_start(s.c, s.B, eps0, s.delta);
    check(s.epochs[0].n >= required, "n_o >= (20 c^2 B^2/eps_0^2) ln(4/delta)");
    // The two start times agree in exact arithmetic; allow for their
    // different rounding paths.
    check(rate_bound_min_start(s.c, s.B, s.d, s.delta) >= required * (1.0 - 1e-14),
          "main-theorem start time implies the epoch start-time requirement");
    return audit;
}

BoundParams BoundParams::from_gap(double c_o, double lambda1, double lambda2, double B,
                                  std::size_t d, double delta, double n_o) {
    if (!(lambda1 > lambda2)) {
        throw std::invalid_argument("BoundParams: lambda1 must exceed lambda2");
    }
    BoundParams p;
    p.c_o = c_o;
    p.c = c_o / (2.0 * (lambda1 - lambda2));
    p.B = B;
    p.d = d;
    p.delta = delta;
    p.n_o = n_o;
    p.lambda1 = lambda1;
    p.lambda2 = lambda2;
    p.validate();
    return p;
}

void BoundParams::validate() const {
    if (!(c_o > 0.0) || !(c > 0.0) || !(B > 0.0)) {
        throw std::invalid_argument("BoundParams: c_o, c and B must be positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("BoundParams: delta must lie in (0,1)");
    }
    if (d < 3) {
        throw std::invalid_argument("BoundParams: d must be >= 3");
    }
    if (!(n_o >= 0.0)) {
        throw std::invalid_argument("BoundParams: n_o must be >= 0");
    }
    if (lambda1.has_value() != lambda2.has_value()) {
        throw std::invalid_argument("BoundParams: give both eigenvalues or neither");
    }
    if (lambda1) {
        if (!(*lambda1 > *lambda2)) {
            throw std::invalid_argument("BoundParams: lambda1 must exceed lambda2");
        }
        const double expected = c_o / (2.0 * (*lambda1 - *lambda2));
        if (std::abs(c - expected) > 1e-9 * expected) {
            throw std::invalid_argument("BoundParams: c must equal c_o / (2 (lambda1 - lambda2))");
        }
    }
}

double final_epoch_start(const BoundParams& params) {
    const double ratio = 4.0 * e * static_cast<double>(params.d) / (params.delta * params.delta);
    return (params.n_o + 1.0) * std::pow(ratio, 5.0 / (params.c_o * std::numbers::ln2)) - 1.0;
}

double krasulina_bound(const BoundParams& params, double n) {
    params.validate();
    const double a = params.a();
    if (a == 1.0) {
        throw std::invalid_argument("krasulina_bound: c_o = 2 is not covered by either branch");
    }
    const double n_J = final_epoch_start(params);
    if (!(n >= n_J)) {
        throw std::invalid_argument(
            fmt::format("krasulina_bound: stated for n >= n_J = {:.17g}, got n = {:.17g}", n_J, n));
    }
    const double b = params.b();
    const double ratio = 4.0 * e * static_cast<double>(params.d) / (params.delta * params.delta);
    const double head = 0.5 * std::pow((params.n_o + 1.0) / (n + 1.0), a) *
                        std::pow(ratio, 5.0 / (2.0 * std::numbers::ln2));
    if (a > 1.0) {
        return head + b / (a - 1.0) * std::exp((a + 1.0) / (n_J + 1.0)) / (n + 1.0);
    }
    return head + 4.0 * b * zeta(2.0 - a) / std::pow(n + 1.0, a);
}

RateBoundConstants rate_bound_constants(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("rate_bound_constants: delta must lie in (0,1)");
    }
    RateBoundConstants k;
    k.a_exponent = 5.0 / (2.0 * std::numbers::ln2);
    k.A1 = 0.5 * std::pow(4.0 * e, k.a_exponent);
    // (20 c^2 B^2 / eps_0^2) ln(4/delta) with eps_0 = delta^2/(8ed) equals
    // (1280 e^2 B^2 c^2 d^2 / delta^4) ln(4/delta).
    k.A_o = 1280.0 * e * e * std::log(4.0 / delta) / std::log(1.0 / delta);
    return k;
}

double rate_bound_min_start(double c, double B, std::size_t d, double delta) {
    const double A_o = rate_bound_constants(delta).A_o;
    const double dd = static_cast<double>(d);
    return std::ceil(A_o * B * B * c * c * dd * dd / std::pow(delta, 4) * std::log(1.0 / delta));
}

double solve_recurrence(double u_t0, std::int64_t t0, double a, double b, std::int64_t t) {
    if (!(a > 0.0) || a == 1.0) {
        throw std::invalid_argument("solve_recurrence: need a > 0 and a != 1");
    }
    if (!(b >= 0.0)) {
        throw std::invalid_argument("solve_recurrence: b must be >= 0");
    }
    if (t0 < 0 || t < t0) {
        throw std::invalid_argument("solve_recurrence: need t >= t0 >= 0");
    }
    const double T0 = static_cast<double>(t0);
    const double T = static_cast<double>(t);
    const double decay = std::pow((T0 + 1.0) / (T + 1.0), a) * u_t0;
    if (a > 1.0) {
        return decay + b / (a - 1.0) * std::pow(1.0 + 1.0 / (T0 + 1.0), a + 1.0) / (T + 1.0);
    }
    return decay + 4.0 * b * zeta(2.0 - a) / std::pow(T + 1.0, a);
}

double zeta(double s) {
    if (!(s > 1.0)) {
        throw std::invalid_argument("zeta: s must exceed 1");
    }
    constexpr int N = 16;
    double sum = 0.0;
    for (int k = N - 1; k >= 1; --k) {
        sum += std::pow(static_cast<double>(k), -s);
    }
    const double n = N;
    sum += std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s);
    // B_{2j} / (2j)!
    constexpr std::array<double, 5> coef{1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0,
                                         -1.0 / 1209600.0, 1.0 / 47900160.0};
    double rising = s;  // s (s+1) ... (s+2j-2)
    double power = std::pow(n, -s - 1.0);
    for (std::size_t j = 0; j < coef.size(); ++j) {
        sum += coef[j] * rising * power;
        rising *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
        power /= n * n;
    }
    return sum;
}

double mgf_bound(std::size_t d, double t) {
    if (d < 3 || !(t > 0.0)) {
        throw std::invalid_argument("mgf_bound: need d >= 3 and t > 0");
    }
    return std::exp(t) * std::sqrt((static_cast<double>(d) - 1.0) / (2.0 * t));
}

double AlwaysGoodBound::min_start(double B, double c, std::size_t d) const {
    const double dd = static_cast<double>(d);
    return std::ceil(2.0 * B * B * c * c * dd * dd / (eps * eps));
}

AlwaysGoodBound always_good_bound(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::invalid_argument("always_good_bound: eps must lie in (0,1)");
    }
    AlwaysGoodBound out;
    out.eps = eps;
    out.probability = std::sqrt(2.0 * e * eps);
    out.vacuous = out.probability >= 1.0;
    return out;
}

double heuristic_rate(double c, double lambda1, double lambda2, std::size_t d, double n) {
    if (!(n >= 1.0)) {
        throw std::invalid_argument("heuristic_rate: n must be >= 1");
    }
    return (static_cast<double>(d) - 1.0) / std::pow(n, 2.0 * c * (lambda1 - lambda2));
}

double beta_step(Rule rule, double gamma, double B) {
    if (!(gamma >= 0.0) || !(B >= 0.0)) {
        throw std::invalid_argument("beta_step: gamma and B must be non-negative");
    }
    const double gb = gamma * B;
    if (rule == Rule::krasulina) {
        return gb * gb / 4.0;
    }
    return 5.0 * gb * gb + 2.0 * gb * gb * gb;
}

}  // namespace ipca::theory
