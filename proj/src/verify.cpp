#include "ipca/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ipca/theory.hpp"

namespace ipca::verify {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Running mean and variance (Welford).
struct Moments {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double std_error() const {
        if (n < 2) {
            return 0.0;
        }
        return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

std::string show(const Vector& v) { return fmt::format("[{:.17g}]", fmt::join(v, ", ")); }

}  // namespace

CheckReport judge(CheckReport r) {
    const double allowance = 3.0 * r.std_error + r.slack_used;
    if (r.vacuous) {
        r.pass = true;
        return r;
    }
    switch (r.sidedness) {
    case Sidedness::two_sided:
        r.pass = std::abs(r.empirical - r.reference) <= allowance;
        break;
    case Sidedness::upper:
        r.pass = r.empirical <= r.reference + allowance;
        break;
    case Sidedness::lower:
        r.pass = r.empirical >= r.reference - allowance;
        break;
    }
    return r;
}

std::string csv_header() { return "name,n_samples,empirical,reference,std_error,pass,slack"; }

std::string csv_row(const CheckReport& r) {
    return fmt::format("{},{},{:.17g},{:.17g},{:.17g},{},{:.17g}", r.name, r.n_samples,
                       r.empirical, r.reference, r.std_error, r.pass ? 1 : 0, r.slack_used);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 2) {
        throw std::invalid_argument("log_grid: need 0 < lo <= hi and n >= 2");
    }
    std::vector<double> out(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

CheckReport check_xi_expectation(const Source& source, const Vector& v, std::int64_t n_samples,
                                 RngStream& rng) {
    if (n_samples < 1) {
        throw std::invalid_argument("check_xi_expectation: need at least one sample");
    }
    const SymMatrix A = second_moment(source);
    const std::size_t d = A.dim();
    Vector reference = A.apply(v);
    const double G = rayleigh_quotient(A, v);
    axpy(-G, v, reference);

    std::vector<Moments> moments(d);
    for (std::int64_t s = 0; s < n_samples; ++s) {
        const Vector e = xi(v, sample(source, rng));
        for (std::size_t i = 0; i < d; ++i) {
            moments[i].add(e[i]);
        }
    }

    const double slack = 1e-12 * A.frobenius_norm() * norm(v);
    std::size_t worst = 0;
    double worst_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
        const double excess = std::abs(moments[i].mean - reference[i]) - slack;
        const double se = moments[i].std_error();
        double score = 0.0;
        if (se > 0.0) {
            score = excess / se;
        } else {
            score = excess > 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
        }
        if (score > worst_score) {
            worst_score = score;
            worst = i;
        }
    }
    CheckReport r;
    r.name = "xi_expectation";
    r.n_samples = n_samples;
    r.empirical = moments[worst].mean;
    r.reference = reference[worst];
    r.std_error = moments[worst].std_error();
    r.slack_used = slack;
    r.sidedness = Sidedness::two_sided;
    r.detail = fmt::format("worst coordinate {} of {}", worst, d);
    return judge(r);
}

CheckReport check_z_expectation(const Source& source, const Vector& v, double gamma,
                                std::int64_t n_samples, RngStream& rng) {
    if (n_samples < 1) {
        throw std::invalid_argument("check_z_expectation: need at least one sample");
    }
    const SymMatrix A = second_moment(source);
    const GroundTruth truth = ground_truth(source);
    const double psi = potential(v, truth.v_star);
    const double along = 1.0 - psi;  // (v^ . v*)^2
    const double reference = 2.0 * gamma * along * (truth.lambda1 - rayleigh_quotient(A, v));
    const double lower = 2.0 * gamma * truth.gap() * psi * (1.0 - psi);

    Moments m;
    for (std::int64_t s = 0; s < n_samples; ++s) {
        m.add(z_increment(v, sample(source, rng), gamma, truth.v_star));
    }
    CheckReport r;
    r.name = "z_expectation";
    r.n_samples = n_samples;
    r.empirical = m.mean;
    r.reference = reference;
    r.std_error = m.std_error();
    r.slack_used = 1e-12 * gamma * truth.B;
    r.sidedness = Sidedness::two_sided;
    r = judge(r);

    CheckReport lo = r;
    lo.reference = lower;
    lo.sidedness = Sidedness::lower;
    lo = judge(lo);
    r.pass = r.pass && lo.pass;
    r.detail = fmt::format("lower bound 2 gamma gap Psi (1-Psi) = {:.17g} ({})", lower,
                           lo.pass ? "cleared" : "violated");
    return r;
}

StepAudit audit_step(Rule rule, const Vector& v, const Vector& v_next, const Vector& x,
                     double gamma, const Vector& v_star, double B, bool renormalized) {
    StepAudit a;
    const double nv = norm(v);
    const double nx = norm(x);
    a.psi_before = potential(v, v_star);
    a.psi_after = potential(v_next, v_star);
    const Vector e = xi(v, x);
    a.xi_norm_squared = norm_squared(e);
    a.z = z_increment(v, x, gamma, v_star);
    a.beta = theory::beta_step(rule, gamma, B);
    const double vx = dot(v, x);

    auto fail = [&](std::string what) { a.violations.push_back(std::move(what)); };

    if (a.psi_after > a.psi_before + a.beta - a.z + 1e-12 * std::max(1.0, a.psi_before)) {
        fail(fmt::format("Psi_n <= Psi_(n-1) + beta - Z: {:.17g} > {:.17g}", a.psi_after,
                         a.psi_before + a.beta - a.z));
    }
    const double xv = dot(e, v);
    if (std::abs(xv) > 1e-10 * std::sqrt(a.xi_norm_squared) * nv + 8.0 * kEps * std::abs(vx) * nx * nv) {
        fail(fmt::format("xi . V = {:.17g} not zero", xv));
    }
    if (a.xi_norm_squared > B * B * nv * nv / 4.0 * (1.0 + 1e-12)) {
        fail(fmt::format("||xi||^2 = {:.17g} > B^2 ||V||^2 / 4", a.xi_norm_squared));
    }
    if (std::abs(a.z) > 4.0 * gamma * B * (1.0 + 1e-12)) {
        fail(fmt::format("|Z| = {:.17g} > 4 gamma B", std::abs(a.z)));
    }
    const double n_next = norm(v_next);
    if (rule == Rule::krasulina && !renormalized && n_next < nv * (1.0 - 1e-12)) {
        fail(fmt::format("Krasulina norm decreased: {:.17g} -> {:.17g}", nv, n_next));
    }
    if (rule == Rule::oja && std::abs(n_next - 1.0) > 1e-12) {
        fail(fmt::format("Oja norm {:.17g} != 1", n_next));
    }
    if (vx == 0.0 && !renormalized && !(v_next == v)) {
        fail("x orthogonal to V but V changed");
    }
    // v_next must stay in span{v, x}.
    Vector q1 = v;
    normalize_in_place(q1);
    Vector residual = v_next;
    axpy(-dot(q1, v_next), q1, residual);
    Vector r = x;
    axpy(-dot(q1, x), q1, r);
    if (norm(r) > 1e-12 * nx) {
        normalize_in_place(r);
        axpy(-dot(r, residual), r, residual);
    }
    if (norm(residual) > 1e-10 * n_next) {
        fail(fmt::format("V_n leaves span(V_(n-1), x): residual {:.17g}", norm(residual)));
    }
    return a;
}

CheckReport check_pathwise(const Source& source, const PathwiseConfig& config, RngStream& rng) {
    if (config.steps < 1 || config.trials < 1) {
        throw std::invalid_argument("check_pathwise: need steps >= 1 and trials >= 1");
    }
    const GroundTruth truth = ground_truth(source);
    const std::size_t d = dimension(source);
    const LearningRate lr{config.c, config.n_o};
    lr.validate();

    std::int64_t total = 0;
    std::int64_t violations = 0;
    std::size_t skipped = 0;
    std::string first;
    for (std::size_t t = 0; t < config.trials; ++t) {
        RngStream trial_rng = rng.child(t);
        EstimatorState state;
        try {
            state = make_state(config.rule, init_vector(config.init, d, source, trial_rng), lr);
        } catch (const ZeroInitError&) {
            ++skipped;
            continue;
        }
        for (std::int64_t s = 0; s < config.steps; ++s) {
            const Vector x = sample(source, trial_rng);
            const Vector before = state.v;
            const auto renorms = state.renormalizations;
            const double gamma = state.lr.at(state.n + 1);
            step(state, x);
            const StepAudit a = audit_step(config.rule, before, state.v, x, gamma, truth.v_star,
                                           truth.B, state.renormalizations != renorms);
            ++total;
            if (!a.violations.empty()) {
                violations += static_cast<std::int64_t>(a.violations.size());
                if (first.empty()) {
                    first = fmt::format(
                        "trial {} step n={} gamma={:.17g} psi_before={:.17g} psi_after={:.17g} "
                        "z={:.17g} beta={:.17g} v={} x={} v_next={}: {}",
                        t, state.n, gamma, a.psi_before, a.psi_after, a.z, a.beta, show(before),
                        show(x), show(state.v), fmt::join(a.violations, "; "));
                }
            }
        }
    }
    CheckReport r;
    r.name = fmt::format("pathwise_{}_c{:g}_{}", to_string(config.rule), config.c,
                         to_string(config.init.mode));
    r.n_samples = total;
    r.empirical = static_cast<double>(violations);
    r.reference = 0.0;
    r.sidedness = Sidedness::upper;
    r.detail = first.empty() ? fmt::format("{} zero-init trials skipped", skipped) : first;
    return judge(r);
}

CheckReport check_mgf(std::size_t d, double t, std::int64_t n_samples, RngStream& rng) {
    const double bound = theory::mgf_bound(d, t);
    const Vector e1 = Vector::unit(d, 0);
    Moments m;
    for (std::int64_t s = 0; s < n_samples; ++s) {
        m.add(std::exp(t * potential(random_unit_vector(d, rng), e1)));
    }
    CheckReport r;
    r.name = fmt::format("mgf_d{}_t{:g}", d, t);
    r.n_samples = n_samples;
    r.empirical = m.mean;
    r.reference = bound;
    r.std_error = m.std_error();
    r.sidedness = Sidedness::upper;
    r.vacuous = bound >= std::exp(t);
    r.detail = r.vacuous ? "bound not below the trivial e^t" : "";
    return judge(r);
}

CheckReport check_initial_potential(std::size_t d, std::int64_t n_samples, RngStream& rng) {
    const Vector e1 = Vector::unit(d, 0);
    Moments m;
    for (std::int64_t s = 0; s < n_samples; ++s) {
        m.add(potential(random_unit_vector(d, rng), e1));
    }
    CheckReport r;
    r.name = fmt::format("initial_potential_d{}", d);
    r.n_samples = n_samples;
    r.empirical = m.mean;
    r.reference = 1.0 - 1.0 / static_cast<double>(d);
    r.std_error = m.std_error();
    r.sidedness = Sidedness::two_sided;
    return judge(r);
}

CheckReport check_gamma_inequality(const std::vector<double>& z_grid) {
    if (z_grid.empty()) {
        throw std::invalid_argument("check_gamma_inequality: empty grid");
    }
    CheckReport r;
    r.name = "gamma_inequality";
    r.n_samples = static_cast<std::int64_t>(z_grid.size());
    r.sidedness = Sidedness::upper;
    double worst = -std::numeric_limits<double>::infinity();
    for (double z : z_grid) {
        if (!(z > 0.0)) {
            throw std::invalid_argument("check_gamma_inequality: z must be positive");
        }
        const double lhs = std::lgamma(z + 0.5);
        const double g = std::lgamma(z);
        const double half_log = 0.5 * std::log(z);
        const double diff = lhs - g - half_log;
        const double slack = 4.0 * kEps * (std::abs(lhs) + std::abs(g) + std::abs(half_log));
        if (diff - slack > worst) {
            worst = diff - slack;
            r.empirical = diff;
            r.slack_used = slack;
            r.detail = fmt::format("tightest at z={:.17g}, ratio {:.17g}", z, std::exp(diff));
        }
    }
    return judge(r);
}

CheckReport check_always_good(const Source& source, const AlwaysGoodConfig& config,
                              RngStream& rng) {
    const theory::AlwaysGoodBound bound = theory::always_good_bound(config.eps);
    const GroundTruth truth = ground_truth(source);
    const std::size_t d = dimension(source);
    const auto n_o = static_cast<std::int64_t>(bound.min_start(truth.B, config.c, d));
    const std::int64_t horizon = config.horizon == 0 ? 10 * n_o : config.horizon;
    if (horizon < 10 * n_o) {
        throw std::invalid_argument("check_always_good: horizon must be >= 10 n_o");
    }
    if (config.trials < 1) {
        throw std::invalid_argument("check_always_good: need trials >= 1");
    }
    const double threshold = 1.0 - config.eps / static_cast<double>(d);

    std::size_t hits = 0;
    for (std::size_t t = 0; t < config.trials; ++t) {
        RngStream trial_rng = rng.child(t);
        EstimatorState state = make_state(config.rule, random_unit_vector(d, trial_rng),
                                          LearningRate{config.c, n_o});
        bool hit = potential(state.v, truth.v_star) >= threshold;
        while (!hit && state.n < horizon) {
            step(state, sample(source, trial_rng));
            hit = potential(state.v, truth.v_star) >= threshold;
        }
        hits += hit ? 1 : 0;
    }
    const double n = static_cast<double>(config.trials);
    const double frac = static_cast<double>(hits) / n;
    CheckReport r;
    r.name = fmt::format("always_good_eps{:g}", config.eps);
    r.n_samples = static_cast<std::int64_t>(config.trials);
    r.empirical = frac;
    r.reference = bound.probability;
    r.std_error = std::sqrt(frac * (1.0 - frac) / n);
    r.sidedness = Sidedness::upper;
    r.vacuous = bound.vacuous;
    r.detail = fmt::format("n_o={} horizon={}{}", n_o, horizon, bound.vacuous ? " (vacuous bound)" : "");
    return judge(r);
}

namespace {

double gradient_error(const SymMatrix& A, const Vector& v, double h) {
    const Vector g = rayleigh_gradient(A, v);
    Vector fd(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        Vector plus = v;
        Vector minus = v;
        plus[k] += h;
        minus[k] -= h;
        fd[k] = (rayleigh_quotient(A, plus) - rayleigh_quotient(A, minus)) / (2.0 * h);
    }
    return norm(g - fd) / std::max(norm(g), 0.01);
}

CheckReport gradient_report(std::string name, std::size_t n, double worst) {
    CheckReport r;
    r.name = std::move(name);
    r.n_samples = static_cast<std::int64_t>(n);
    r.empirical = worst;
    r.reference = 1e-6;
    r.sidedness = Sidedness::upper;
    return judge(r);
}

// Radius kept in [0.5, 2]: the difference step h is absolute, and near the
// origin (h/||v||)^2 truncation error swamps the comparison.
Vector random_point(std::size_t d, RngStream& rng) {
    Vector v = random_unit_vector(d, rng);
    const double radius = 0.5 + 1.5 * rng.uniform();
    for (double& e : v) {
        e *= radius;
    }
    return v;
}

}  // namespace

CheckReport check_gradient(const SymMatrix& A, std::size_t n_points, double h, RngStream& rng) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("check_gradient: h must be positive");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        worst = std::max(worst, gradient_error(A, random_point(A.dim(), rng), h));
    }
    return gradient_report("rayleigh_gradient", n_points, worst);
}

CheckReport check_gradient_random_diagonal(std::size_t d, std::size_t n_draws, double h,
                                           RngStream& rng) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("check_gradient_random_diagonal: h must be positive");
    }
    double worst = 0.0;
    std::vector<double> diag(d);
    for (std::size_t i = 0; i < n_draws; ++i) {
        for (double& e : diag) {
            e = 0.1 + 1.9 * rng.uniform();
        }
        worst = std::max(worst, gradient_error(SymMatrix::diagonal(diag), random_point(d, rng), h));
    }
    return gradient_report("rayleigh_gradient_random_diagonal", n_draws, worst);
}

SuiteScale SuiteScale::quick() {
    SuiteScale s;
    s.expectation_samples = 20000;
    s.expectation_vectors = 3;
    s.pathwise_steps = 2000;
    s.pathwise_trials = 2;
    s.mgf_samples = 100000;
    s.always_good_trials = 40;
    s.gradient_draws = 100;
    return s;
}

std::vector<CheckReport> run_suite(std::uint64_t seed, const SuiteScale& scale) {
    std::vector<CheckReport> out;
    std::uint64_t stream = 0;
    auto next_rng = [&] { return RngStream(seed, stream++); };

    const Source coord = CoordinateDistribution{0.2, 0.5, 10};
    for (std::size_t i = 0; i < scale.expectation_vectors; ++i) {
        RngStream rng = next_rng();
        const Vector v = random_unit_vector(10, rng);
        CheckReport r = check_xi_expectation(coord, v, scale.expectation_samples, rng);
        r.name += fmt::format("_{}", i);
        out.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < scale.expectation_vectors; ++i) {
        RngStream rng = next_rng();
        const Vector v = random_unit_vector(10, rng);
        CheckReport r = check_z_expectation(coord, v, 0.1, scale.expectation_samples, rng);
        r.name += fmt::format("_{}", i);
        out.push_back(std::move(r));
    }
    for (Rule rule : {Rule::krasulina, Rule::oja}) {
        for (double c : {0.5, 5.0}) {
            for (InitMode mode : {InitMode::random_unit, InitMode::first_point, InitMode::average_k}) {
                RngStream rng = next_rng();
                PathwiseConfig cfg;
                cfg.rule = rule;
                cfg.c = c;
                cfg.init = InitSpec{mode, 2};
                cfg.steps = scale.pathwise_steps;
                cfg.trials = scale.pathwise_trials;
                out.push_back(check_pathwise(coord, cfg, rng));
            }
        }
    }
    {
        RngStream rng = next_rng();
        out.push_back(check_mgf(10, 5.0, scale.mgf_samples, rng));
    }
    {
        RngStream rng = next_rng();
        out.push_back(check_mgf(3, 1.0, scale.mgf_samples, rng));
    }
    {
        RngStream rng = next_rng();
        out.push_back(check_initial_potential(10, scale.mgf_samples, rng));
    }
    out.push_back(check_gamma_inequality(log_grid(1e-3, 1e6, 200)));
    {
        RngStream rng = next_rng();
        AlwaysGoodConfig cfg;
        cfg.trials = scale.always_good_trials;
        cfg.horizon = 100000;
        out.push_back(check_always_good(CoordinateDistribution{0.5, 0.5, 3}, cfg, rng));
    }
    {
        RngStream rng = next_rng();
        const std::vector<double> diag{2.0, 1.0};
        out.push_back(check_gradient(SymMatrix::diagonal(diag), scale.gradient_draws, 1e-5, rng));
    }
    {
        RngStream rng = next_rng();
        out.push_back(check_gradient_random_diagonal(10, scale.gradient_draws, 1e-5, rng));
    }
    return out;
}

}  // namespace ipca::verify
