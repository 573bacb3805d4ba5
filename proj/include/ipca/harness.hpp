#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ipca/distributions.hpp"
#include "ipca/estimators.hpp"
#include "ipca/theory.hpp"

namespace ipca::harness {

enum class DistributionKind { coordinate, gaussian, csv };

struct DistributionSpec {
    DistributionKind kind = DistributionKind::coordinate;
    CoordinateDistribution coordinate;
    // gaussian
    std::vector<double> eigenvalues;
    std::optional<double> clip;
    std::optional<std::uint64_t> rotation_seed;  // unset: identity rotation
    // csv
    std::filesystem::path csv_path;
    bool center = true;
};

std::string to_string(DistributionKind kind);

/// A sampling source together with the target it is measured against.
/// `frame` holds the top-p eigenvectors (frame[0] = truth.v_star) and
/// `gap` the eigengap lambda_p - lambda_{p+1} that c_o is scaled by.
struct PreparedSource {
    Source source;
    GroundTruth truth;
    std::vector<Vector> frame;
    double gap = 0.0;
    std::vector<std::string> warnings;
};

/// File data is resampled i.i.d. from the (centered) records; its target
/// is the top of their second-moment matrix. Throws if lambda_p does not
/// exceed lambda_{p+1}.
PreparedSource prepare_source(const DistributionSpec& spec, std::size_t p = 1);

enum class RuleKind { krasulina, oja, block_oja };

std::string to_string(RuleKind rule);
RuleKind parse_rule(const std::string& name);
InitMode parse_init(const std::string& name);

struct ExperimentConfig {
    DistributionSpec distribution;
    RuleKind rule = RuleKind::oja;
    std::size_t block_p = 1;
    InitSpec init;
    std::optional<double> c;    // exactly one of c and c_o
    std::optional<double> c_o;  // c = c_o / (2 gap)
    std::int64_t n_o = 0;
    std::int64_t horizon = 100000;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::size_t grid_points = 200;
    std::size_t threads = 1;

    void validate() const;
    double resolved_c(const PreparedSource& prepared) const;
};

struct TracePoint {
    std::int64_t n = 0;
    double psi = 0.0;
};

struct Trace {
    std::uint64_t trial_id = 0;
    std::vector<TracePoint> points;
    bool failed = false;
    std::string failure;
    std::uint64_t renormalizations = 0;
    std::uint64_t collapse_events = 0;
    std::uint64_t rejected_draws = 0;
};

/// Roughly `points` log-spaced step indices in [n_o + 1, horizon], strictly
/// increasing, always ending at horizon.
std::vector<std::int64_t> record_grid(std::int64_t n_o, std::int64_t horizon, std::size_t points);

/// One trajectory on RngStream(seed, trial_id). Psi is the potential w.r.t.
/// the target (the subspace potential for block Oja). A zero initial vector
/// marks the trace failed.
Trace run_trial(const ExperimentConfig& config, const PreparedSource& prepared,
                std::uint64_t trial_id);

/// Calls body(i) for i in [0, count) on up to `threads` threads.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

struct Aggregate {
    std::vector<std::int64_t> n;
    std::vector<double> mean;
    std::vector<double> median;
    std::vector<double> q10;
    std::vector<double> q90;
    std::size_t trials_ok = 0;
    std::size_t trials_failed = 0;
    std::vector<std::string> failures;
    std::uint64_t renormalizations = 0;
    std::uint64_t collapse_events = 0;
    std::uint64_t rejected_draws = 0;
};

/// Type-7 sample quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

/// Reduces traces in trial order. Throws if every trial failed.
Aggregate aggregate(const std::vector<Trace>& traces);

struct ExperimentResult {
    PreparedSource prepared;
    double c = 0.0;
    std::vector<Trace> traces;
    Aggregate summary;
};

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedSource& prepared);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
    std::int64_t n_lo = 0;
    std::int64_t n_hi = 0;
    bool window_shrunk = false;
};

/// Least squares of ln Psi on ln n over n_min <= n <= n_max. Nonpositive
/// Psi values shrink the window to the longest positive run (flagged).
/// Throws when fewer than 5 usable points remain.
SlopeFit estimate_slope(const std::vector<TracePoint>& points, std::int64_t n_min, std::int64_t n_max);

struct CounterexampleConfig {
    double p = 0.2;
    double sigma = 0.5;
    std::size_t d = 10;
    InitSpec init{InitMode::first_point, 2};
    Rule rule = Rule::oja;
    double c_o = 4.0;
    std::size_t trials = 1000;
    std::int64_t horizon = 1000;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    double threshold = 0.99;
};

struct CounterexampleResult {
    double wrong_fraction = 0.0;
    double std_error = 0.0;
    std::size_t trials_ok = 0;
    std::size_t trials_failed = 0;
    std::size_t wrong = 0;
};

/// Fraction of trials whose final Psi w.r.t. e_1 exceeds the threshold.
/// Trials whose initializer returns zero are excluded and counted.
CounterexampleResult counterexample_experiment(const CounterexampleConfig& config);

/// Columns j,n_j,eps_j, then "# audit: ..." describing audit_schedule.
void emit_schedule(std::ostream& out, const theory::EpochSchedule& schedule);

/// Columns n,bound over `points` log-spaced n in [n_min, n_max].
void emit_bound(std::ostream& out, const theory::BoundParams& params, double n_min, double n_max,
                std::size_t points);

/// '#' metadata lines followed by n,mean_psi,median_psi,q10_psi,q90_psi,trials_ok.
void write_aggregate_csv(std::ostream& out, const ExperimentConfig& config,
                         const ExperimentResult& result);

/// The file name used for a (rule, c) pair, e.g. "oja_c11.25.csv".
std::string aggregate_file_name(const ExperimentConfig& config, double c);

/// Reads the rows of an aggregate CSV; `column` selects the Psi column.
std::vector<TracePoint> read_aggregate_csv(std::istream& in, const std::string& column = "mean_psi");

}  // namespace ipca::harness
