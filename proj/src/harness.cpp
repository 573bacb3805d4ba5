#include "ipca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace ipca::harness {

std::string to_string(DistributionKind kind) {
    switch (kind) {
    case DistributionKind::coordinate:
        return "coordinate";
    case DistributionKind::gaussian:
        return "gaussian";
    case DistributionKind::csv:
        return "csv";
    }
    return "unknown";
}

std::string to_string(RuleKind rule) {
    switch (rule) {
    case RuleKind::krasulina:
        return "krasulina";
    case RuleKind::oja:
        return "oja";
    case RuleKind::block_oja:
        return "block_oja";
    }
    return "unknown";
}

RuleKind parse_rule(const std::string& name) {
    if (name == "krasulina") {
        return RuleKind::krasulina;
    }
    if (name == "oja") {
        return RuleKind::oja;
    }
    if (name == "block_oja" || name == "block") {
        return RuleKind::block_oja;
    }
    throw std::invalid_argument("unknown rule '" + name + "' (krasulina, oja, block_oja)");
}

InitMode parse_init(const std::string& name) {
    if (name == "random_unit" || name == "random") {
        return InitMode::random_unit;
    }
    if (name == "first_point") {
        return InitMode::first_point;
    }
    if (name == "average_k") {
        return InitMode::average_k;
    }
    throw std::invalid_argument("unknown init mode '" + name +
                                "' (random_unit, first_point, average_k)");
}

PreparedSource prepare_source(const DistributionSpec& spec, std::size_t p) {
    PreparedSource out;
    switch (spec.kind) {
    case DistributionKind::coordinate:
        spec.coordinate.validate();
        out.source = spec.coordinate;
        break;
    case DistributionKind::gaussian: {
        std::vector<Vector> rotation;
        if (spec.rotation_seed) {
            RngStream rng(*spec.rotation_seed, 0);
            rotation = random_orthonormal_frame(spec.eigenvalues.size(), spec.eigenvalues.size(), rng);
        }
        out.source = GaussianSpectrum::make(spec.eigenvalues, std::move(rotation), spec.clip);
        break;
    }
    case DistributionKind::csv: {
        DatasetStream stream(spec.csv_path, spec.center);
        const EmpiricalGroundTruth eg = empirical_ground_truth(stream);
        if (!eg.converged || !(eg.truth.gap() > 1e-10 * eg.truth.lambda1)) {
            throw std::runtime_error(fmt::format("prepare_source: {} has no usable eigengap: {}",
                                                 spec.csv_path.string(), fmt::join(eg.warnings, "; ")));
        }
        out.warnings = eg.warnings;
        out.source = DiscreteDistribution::uniform_over(load_records(stream));
        break;
    }
    }
    out.truth = ground_truth(out.source);

    const std::size_t d = dimension(out.source);
    if (p < 1 || p > d) {
        throw std::invalid_argument("prepare_source: need 1 <= p <= d");
    }
    if (p == 1) {
        out.frame = {out.truth.v_star};
        out.gap = out.truth.gap();
        return out;
    }
    const EigenPairs eig = top_eigs(second_moment(out.source), std::min(p + 1, d));
    if (!eig.converged) {
        throw std::runtime_error("prepare_source: eigen-oracle did not converge");
    }
    const double next = p < d ? eig.values[p] : 0.0;
    out.gap = eig.values[p - 1] - next;
    if (!(out.gap > 1e-10 * eig.values[0])) {
        throw std::invalid_argument(
            fmt::format("prepare_source: lambda_{} does not exceed lambda_{}", p, p + 1));
    }
    out.frame.assign(eig.vectors.begin(), eig.vectors.begin() + static_cast<std::ptrdiff_t>(p));
    out.frame[0] = out.truth.v_star;
    return out;
}

void ExperimentConfig::validate() const {
    if (c.has_value() == c_o.has_value()) {
        throw std::invalid_argument("ExperimentConfig: give exactly one of c and c_o");
    }
    if ((c && !(*c > 0.0)) || (c_o && !(*c_o > 0.0))) {
        throw std::invalid_argument("ExperimentConfig: c / c_o must be positive");
    }
    if (n_o < 0 || horizon <= n_o) {
        throw std::invalid_argument("ExperimentConfig: need 0 <= n_o < horizon");
    }
    if (trials < 1 || grid_points < 2 || threads < 1) {
        throw std::invalid_argument("ExperimentConfig: need trials >= 1, grid >= 2, threads >= 1");
    }
    if (rule == RuleKind::block_oja) {
        if (block_p < 1) {
            throw std::invalid_argument("ExperimentConfig: block width p must be >= 1");
        }
        if (init.mode != InitMode::random_unit) {
            throw std::invalid_argument("ExperimentConfig: block Oja starts from a random frame");
        }
    }
}

double ExperimentConfig::resolved_c(const PreparedSource& prepared) const {
    return c ? *c : *c_o / (2.0 * prepared.gap);
}

std::vector<std::int64_t> record_grid(std::int64_t n_o, std::int64_t horizon, std::size_t points) {
    if (horizon <= n_o || n_o < 0 || points < 2) {
        throw std::invalid_argument("record_grid: need 0 <= n_o < horizon and points >= 2");
    }
    const double a = std::log(static_cast<double>(n_o + 1));
    const double b = std::log(static_cast<double>(horizon));
    std::vector<std::int64_t> grid;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
        const auto n = std::clamp<std::int64_t>(std::llround(std::exp(t)), n_o + 1, horizon);
        if (grid.empty() || n > grid.back()) {
            grid.push_back(n);
        }
    }
    if (grid.back() != horizon) {
        grid.push_back(horizon);
    }
    return grid;
}

Trace run_trial(const ExperimentConfig& config, const PreparedSource& prepared,
                std::uint64_t trial_id) {
    Trace trace;
    trace.trial_id = trial_id;
    RngStream rng(config.seed, trial_id);
    const std::size_t d = dimension(prepared.source);
    const LearningRate lr{config.resolved_c(prepared), config.n_o};
    const std::vector<std::int64_t> grid = record_grid(config.n_o, config.horizon, config.grid_points);
    trace.points.reserve(grid.size());
    SampleCounters counters;

    if (config.rule == RuleKind::block_oja) {
        RngStream side = rng.child(1);
        BlockState state =
            make_block_state(random_orthonormal_frame(d, config.block_p, rng), lr);
        auto psi = [&] {
            return config.block_p == 1 ? potential(state.columns[0], prepared.frame[0])
                                       : subspace_potential(state.columns, prepared.frame);
        };
        for (std::int64_t n : grid) {
            while (state.n < n) {
                block_oja_step(state, sample(prepared.source, rng, &counters), side);
            }
            trace.points.push_back({n, psi()});
        }
        trace.collapse_events = state.collapse_events;
    } else {
        const Rule rule = config.rule == RuleKind::krasulina ? Rule::krasulina : Rule::oja;
        EstimatorState state;
        try {
            state = make_state(rule, init_vector(config.init, d, prepared.source, rng), lr);
        } catch (const ZeroInitError& e) {
            trace.failed = true;
            trace.failure = e.what();
            trace.points.clear();
            return trace;
        }
        for (std::int64_t n : grid) {
            while (state.n < n) {
                step(state, sample(prepared.source, rng, &counters));
            }
            trace.points.push_back({n, potential(state.v, prepared.truth.v_star)});
        }
        trace.renormalizations = state.renormalizations;
    }
    trace.rejected_draws = counters.rejected;
    return trace;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) {
        return values.back();
    }
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

Aggregate aggregate(const std::vector<Trace>& traces) {
    Aggregate agg;
    std::vector<const Trace*> ok;
    for (const Trace& t : traces) {
        if (t.failed) {
            ++agg.trials_failed;
            agg.failures.push_back(fmt::format("trial {}: {}", t.trial_id, t.failure));
        } else {
            ok.push_back(&t);
        }
        agg.renormalizations += t.renormalizations;
        agg.collapse_events += t.collapse_events;
        agg.rejected_draws += t.rejected_draws;
    }
    if (ok.empty()) {
        throw std::runtime_error("aggregate: every trial failed");
    }
    agg.trials_ok = ok.size();
    const std::size_t points = ok.front()->points.size();
    std::vector<double> column(ok.size());
    for (std::size_t k = 0; k < points; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < ok.size(); ++i) {
            column[i] = ok[i]->points.at(k).psi;
            sum += column[i];
        }
        agg.n.push_back(ok.front()->points[k].n);
        agg.mean.push_back(sum / static_cast<double>(ok.size()));
        agg.median.push_back(quantile(column, 0.5));
        agg.q10.push_back(quantile(column, 0.1));
        agg.q90.push_back(quantile(column, 0.9));
    }
    return agg;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    return run_experiment(config, prepare_source(config.distribution,
                                                 config.rule == RuleKind::block_oja ? config.block_p : 1));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedSource& prepared) {
    config.validate();
    ExperimentResult result;
    result.prepared = prepared;
    result.c = config.resolved_c(prepared);
    result.traces.resize(config.trials);
    parallel_for(config.trials, config.threads,
                 [&](std::size_t i) { result.traces[i] = run_trial(config, prepared, i); });
    result.summary = aggregate(result.traces);
    return result;
}

SlopeFit estimate_slope(const std::vector<TracePoint>& points, std::int64_t n_min,
                        std::int64_t n_max) {
    std::vector<TracePoint> window;
    for (const TracePoint& p : points) {
        if (p.n >= n_min && p.n <= n_max) {
            window.push_back(p);
        }
    }
    if (window.empty()) {
        throw std::invalid_argument("estimate_slope: no points in the window");
    }
    // Longest run of positive values.
    std::size_t best_start = 0;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < window.size();) {
        if (!(window[i].psi > 0.0) || !std::isfinite(window[i].psi)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < window.size() && window[j].psi > 0.0 && std::isfinite(window[j].psi)) {
            ++j;
        }
        if (j - i > best_len) {
            best_start = i;
            best_len = j - i;
        }
        i = j;
    }
    if (best_len < 5) {
        throw std::invalid_argument(
            fmt::format("estimate_slope: {} usable points in the window, need 5", best_len));
    }
    SlopeFit fit;
    fit.window_shrunk = best_len != window.size();
    fit.points = best_len;
    fit.n_lo = window[best_start].n;
    fit.n_hi = window[best_start + best_len - 1].n;

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = best_start; i < best_start + best_len; ++i) {
        mx += std::log(static_cast<double>(window[i].n));
        my += std::log(window[i].psi);
    }
    mx /= static_cast<double>(best_len);
    my /= static_cast<double>(best_len);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = best_start; i < best_start + best_len; ++i) {
        const double dx = std::log(static_cast<double>(window[i].n)) - mx;
        const double dy = std::log(window[i].psi) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("estimate_slope: window spans a single n");
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

CounterexampleResult counterexample_experiment(const CounterexampleConfig& config) {
    const CoordinateDistribution dist{config.p, config.sigma, config.d};
    dist.validate();
    if (config.trials < 1 || config.horizon < 1) {
        throw std::invalid_argument("counterexample_experiment: need trials >= 1 and horizon >= 1");
    }
    const Source source = dist;
    const Vector e1 = Vector::unit(config.d, 0);
    const LearningRate lr{config.c_o / (2.0 * (dist.lambda1() - dist.lambda2())), 0};

    // 0: failed init, 1: converged, 2: wrong
    std::vector<int> outcome(config.trials, 0);
    parallel_for(config.trials, config.threads, [&](std::size_t i) {
        RngStream rng(config.seed, i);
        EstimatorState state;
        try {
            state = make_state(config.rule, init_vector(config.init, config.d, source, rng), lr);
        } catch (const ZeroInitError&) {
            return;
        }
        while (state.n < config.horizon) {
            step(state, sample(dist, rng));
        }
        outcome[i] = potential(state.v, e1) > config.threshold ? 2 : 1;
    });

    CounterexampleResult r;
    for (int o : outcome) {
        r.trials_failed += o == 0 ? 1 : 0;
        r.trials_ok += o != 0 ? 1 : 0;
        r.wrong += o == 2 ? 1 : 0;
    }
    if (r.trials_ok == 0) {
        throw std::runtime_error("counterexample_experiment: every initialization was zero");
    }
    const double n = static_cast<double>(r.trials_ok);
    r.wrong_fraction = static_cast<double>(r.wrong) / n;
    r.std_error = std::sqrt(r.wrong_fraction * (1.0 - r.wrong_fraction) / n);
    return r;
}

void emit_schedule(std::ostream& out, const theory::EpochSchedule& schedule) {
    out << "j,n_j,eps_j\n";
    for (const theory::Epoch& e : schedule.epochs) {
        out << fmt::format("{},{:.0f},{:.17g}\n", e.j, e.n, e.eps);
    }
    const theory::ScheduleAudit audit = theory::audit_schedule(schedule);
    if (audit.ok) {
        out << fmt::format("# audit: pass ({} checks)\n", audit.checks);
    } else {
        out << fmt::format("# audit: FAIL ({} of {} checks): {}\n", audit.failures.size(),
                           audit.checks, fmt::join(audit.failures, "; "));
    }
}

void emit_bound(std::ostream& out, const theory::BoundParams& params, double n_min, double n_max,
                std::size_t points) {
    params.validate();
    if (!(n_min >= theory::final_epoch_start(params)) || !(n_max >= n_min) || points < 2) {
        throw std::invalid_argument("emit_bound: need n_J <= n_min <= n_max and points >= 2");
    }
    out << fmt::format("# c_o={:.17g} c={:.17g} B={:.17g} d={} delta={:.17g} n_o={:.17g}\n",
                       params.c_o, params.c, params.B, params.d, params.delta, params.n_o);
    out << fmt::format("# n_J={:.17g}\n", theory::final_epoch_start(params));
    out << "n,bound\n";
    const double a = std::log(n_min);
    const double b = std::log(n_max);
    double last = -1.0;
    for (std::size_t i = 0; i < points; ++i) {
        double n = std::round(std::exp(a + (b - a) * static_cast<double>(i) /
                                               static_cast<double>(points - 1)));
        n = std::clamp(n, std::ceil(n_min), std::floor(n_max));
        if (n <= last) {
            continue;
        }
        last = n;
        out << fmt::format("{:.0f},{:.17g}\n", n, theory::krasulina_bound(params, n));
    }
}

namespace {

std::string describe_distribution(const DistributionSpec& s) {
    switch (s.kind) {
    case DistributionKind::coordinate:
        return fmt::format("coordinate p={:.17g} sigma={:.17g} d={}", s.coordinate.p,
                           s.coordinate.sigma, s.coordinate.d);
    case DistributionKind::gaussian:
        return fmt::format("gaussian eigenvalues={:.17g} clip={} rotation_seed={}",
                           fmt::join(s.eigenvalues, ";"),
                           s.clip ? fmt::format("{:.17g}", *s.clip) : "default",
                           s.rotation_seed ? std::to_string(*s.rotation_seed) : "none");
    case DistributionKind::csv:
        return fmt::format("csv path={} center={}", s.csv_path.string(), s.center);
    }
    return "unknown";
}

}  // namespace

void write_aggregate_csv(std::ostream& out, const ExperimentConfig& config,
                         const ExperimentResult& result) {
    const PreparedSource& ps = result.prepared;
    const Aggregate& agg = result.summary;
    out << fmt::format("# distribution: {}\n", describe_distribution(config.distribution));
    out << fmt::format("# rule={} block_p={} init={} k={}\n", to_string(config.rule),
                       config.block_p, to_string(config.init.mode), config.init.k);
    out << fmt::format("# c={:.17g} c_o={}\n", result.c,
                       config.c_o ? fmt::format("{:.17g}", *config.c_o) : "unset");
    out << fmt::format("# n_o={} horizon={} trials={} seed={} grid_points={}\n", config.n_o,
                       config.horizon, config.trials, config.seed, config.grid_points);
    out << fmt::format("# lambda1={:.17g} lambda2={:.17g} gap={:.17g} B={:.17g}\n",
                       ps.truth.lambda1, ps.truth.lambda2, ps.gap, ps.truth.B);
    out << fmt::format("# trials_failed={} renormalizations={} collapse_events={} rejected_draws={}\n",
                       agg.trials_failed, agg.renormalizations, agg.collapse_events,
                       agg.rejected_draws);
    for (const std::string& w : ps.warnings) {
        out << "# warning: " << w << '\n';
    }
    out << "n,mean_psi,median_psi,q10_psi,q90_psi,trials_ok\n";
    for (std::size_t k = 0; k < agg.n.size(); ++k) {
        out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", agg.n[k], agg.mean[k],
                           agg.median[k], agg.q10[k], agg.q90[k], agg.trials_ok);
    }
}

std::string aggregate_file_name(const ExperimentConfig& config, double c) {
    std::string rule = to_string(config.rule);
    if (config.rule == RuleKind::block_oja) {
        rule += fmt::format("{}", config.block_p);
    }
    return fmt::format("{}_c{:g}.csv", rule, c);
}

std::vector<TracePoint> read_aggregate_csv(std::istream& in, const std::string& column) {
    std::string line;
    std::vector<std::string> header;
    std::size_t col = 0;
    std::vector<TracePoint> points;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            fields.push_back(f);
        }
        if (header.empty()) {
            header = fields;
            const auto it = std::find(header.begin(), header.end(), column);
            if (header.empty() || header[0] != "n" || it == header.end()) {
                throw ParseError("aggregate CSV needs columns n and " + column, line_no);
            }
            col = static_cast<std::size_t>(it - header.begin());
            continue;
        }
        if (fields.size() != header.size()) {
            throw ParseError("wrong number of fields", line_no);
        }
        try {
            points.push_back({std::stoll(fields[0]), std::stod(fields[col])});
        } catch (const std::exception&) {
            throw ParseError("malformed number", line_no);
        }
    }
    if (header.empty()) {
        throw ParseError("aggregate CSV has no header", line_no);
    }
    return points;
}

}  // namespace ipca::harness
