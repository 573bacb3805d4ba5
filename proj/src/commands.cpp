#include "ipca/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "ipca/verify.hpp"

namespace ipca::commands {

std::filesystem::path default_output_dir() {
    const char* env = std::getenv("IPCA_OUTPUT_DIR");
    if (env != nullptr && *env != '\0') {
        return env;
    }
    return "results";
}

std::vector<std::filesystem::path> run(const RunOptions& options, std::ostream& log) {
    if (options.rules.empty()) {
        throw std::invalid_argument("run: no rule given");
    }
    if (options.c_values.empty() == options.c_o_values.empty()) {
        throw std::invalid_argument("run: give c values or c_o values, not both");
    }
    std::filesystem::create_directories(options.output_dir);
    std::vector<std::filesystem::path> written;
    for (harness::RuleKind rule : options.rules) {
        harness::ExperimentConfig cfg = options.base;
        cfg.rule = rule;
        const std::size_t p = rule == harness::RuleKind::block_oja ? cfg.block_p : 1;
        const harness::PreparedSource prepared = harness::prepare_source(cfg.distribution, p);
        for (const harness::ExperimentConfig& variant : [&] {
                 std::vector<harness::ExperimentConfig> v;
                 for (double c : options.c_values) {
                     v.push_back(cfg);
                     v.back().c = c;
                     v.back().c_o.reset();
                 }
                 for (double c_o : options.c_o_values) {
                     v.push_back(cfg);
                     v.back().c_o = c_o;
                     v.back().c.reset();
                 }
                 return v;
             }()) {
            const harness::ExperimentResult result = harness::run_experiment(variant, prepared);
            const auto path = options.output_dir / harness::aggregate_file_name(variant, result.c);
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw std::runtime_error("run: cannot write " + path.string());
            }
            harness::write_aggregate_csv(out, variant, result);
            const auto& agg = result.summary;
            log << fmt::format("{}: {} c={:g} trials_ok={} failed={} final mean psi={:.6g}\n",
                               path.string(), harness::to_string(rule), result.c, agg.trials_ok,
                               agg.trials_failed, agg.mean.back());
            written.push_back(path);
        }
    }
    return written;
}

void slope(const SlopeOptions& options, std::ostream& out) {
    std::ifstream in(options.input);
    if (!in) {
        throw std::runtime_error("slope: cannot open " + options.input.string());
    }
    const std::vector<harness::TracePoint> points = harness::read_aggregate_csv(in, options.column);
    if (points.empty()) {
        throw std::runtime_error("slope: no data rows in " + options.input.string());
    }
    const std::int64_t n_max = options.n_max.value_or(points.back().n);
    const std::int64_t n_min = options.n_min.value_or(n_max / 10);
    const harness::SlopeFit fit = harness::estimate_slope(points, n_min, n_max);
    out << "slope,intercept,r_squared,points,n_lo,n_hi,window_shrunk\n";
    out << fmt::format("{:.17g},{:.17g},{:.17g},{},{},{},{}\n", fit.slope, fit.intercept,
                       fit.r_squared, fit.points, fit.n_lo, fit.n_hi, fit.window_shrunk ? 1 : 0);
}

void counterexample(const harness::CounterexampleConfig& config, std::ostream& out) {
    const harness::CounterexampleResult r = harness::counterexample_experiment(config);
    out << "init,k,rule,p,sigma,d,trials_ok,trials_failed,wrong,wrong_fraction,std_error\n";
    out << fmt::format("{},{},{},{:.17g},{:.17g},{},{},{},{},{:.17g},{:.17g}\n",
                       to_string(config.init.mode), config.init.k, to_string(config.rule),
                       config.p, config.sigma, config.d, r.trials_ok, r.trials_failed, r.wrong,
                       r.wrong_fraction, r.std_error);
}

void schedule(const ScheduleOptions& o, std::ostream& out) {
    harness::emit_schedule(out, theory::epoch_schedule(o.delta, o.d, o.c_o, o.c, o.B, o.n_o));
}

void bound(BoundOptions o, std::ostream& out) {
    if (!o.n_o_given) {
        o.params.n_o = theory::rate_bound_min_start(o.params.c, o.params.B, o.params.d, o.params.delta);
    }
    const double n_J = theory::final_epoch_start(o.params);
    const double n_min = o.n_min.value_or(std::ceil(n_J));
    const double n_max = o.n_max.value_or(100.0 * n_min);
    harness::emit_bound(out, o.params, n_min, n_max, o.points);
}

std::size_t verify(std::uint64_t seed, bool quick, std::ostream& out) {
    const verify::SuiteScale scale = quick ? verify::SuiteScale::quick() : verify::SuiteScale{};
    const std::vector<verify::CheckReport> reports = verify::run_suite(seed, scale);
    out << verify::csv_header() << '\n';
    std::size_t failed = 0;
    for (const verify::CheckReport& r : reports) {
        out << verify::csv_row(r) << '\n';
        failed += r.pass ? 0 : 1;
    }
    return failed;
}

}  // namespace ipca::commands
