#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ipca/harness.hpp"
#include "ipca/theory.hpp"

namespace ipca::commands {

/// IPCA_OUTPUT_DIR if set and non-empty, else "results".
std::filesystem::path default_output_dir();

struct RunOptions {
    harness::ExperimentConfig base;  // rule and c/c_o are taken from the lists below
    std::vector<harness::RuleKind> rules;
    std::vector<double> c_values;
    std::vector<double> c_o_values;
    std::filesystem::path output_dir;
};

/// One aggregate CSV per (rule, c) pair. Returns the files written; a
/// one-line summary per file goes to `log`.
std::vector<std::filesystem::path> run(const RunOptions& options, std::ostream& log);

struct SlopeOptions {
    std::filesystem::path input;
    std::string column = "mean_psi";
    std::optional<std::int64_t> n_min;  // default: last decade of the file
    std::optional<std::int64_t> n_max;
};

void slope(const SlopeOptions& options, std::ostream& out);

void counterexample(const harness::CounterexampleConfig& config, std::ostream& out);

struct ScheduleOptions {
    double delta = 0.1;
    std::size_t d = 10;
    double c_o = 4.0;
    double c = 1.0;
    double B = 1.0;
    std::optional<double> n_o;
};

void schedule(const ScheduleOptions& options, std::ostream& out);

struct BoundOptions {
    theory::BoundParams params;
    bool n_o_given = false;  // otherwise the main theorem's start time
    std::optional<double> n_min;
    std::optional<double> n_max;
    std::size_t points = 200;
};

void bound(BoundOptions options, std::ostream& out);

/// Writes the CheckReport CSV; returns the number of failed checks.
std::size_t verify(std::uint64_t seed, bool quick, std::ostream& out);

}  // namespace ipca::commands
