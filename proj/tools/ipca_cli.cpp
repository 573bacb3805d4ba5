#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ipca/commands.hpp"

namespace {

using namespace ipca;

// Config files hold plain key=value lines for the options of whichever
// subcommand is being run, so unsectioned keys are filed under it.
class SubcommandConfig : public CLI::ConfigBase {
public:
    std::string section;

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigBase::from_config(input);
        for (auto& item : items) {
            if (item.parents.empty() && !section.empty() && item.name != "++" && item.name != "--") {
                item.parents = {section};
            }
        }
        return items;
    }
};

// Writes to --out if given, otherwise stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw std::runtime_error("cannot write " + path);
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

struct DistOptions {
    std::string kind = "coordinate";
    double p = 0.2;
    double sigma = 0.5;
    std::size_t d = 10;
    std::vector<double> eigenvalues;
    std::optional<double> clip;
    std::optional<std::uint64_t> rotation_seed;
    std::string csv;
    bool no_center = false;

    harness::DistributionSpec spec() const {
        harness::DistributionSpec s;
        if (kind == "coordinate") {
            s.kind = harness::DistributionKind::coordinate;
            s.coordinate = CoordinateDistribution{p, sigma, d};
        } else if (kind == "gaussian") {
            s.kind = harness::DistributionKind::gaussian;
            s.eigenvalues = eigenvalues;
            s.clip = clip;
            s.rotation_seed = rotation_seed;
        } else if (kind == "csv") {
            s.kind = harness::DistributionKind::csv;
            if (csv.empty()) {
                throw std::invalid_argument("--dist csv needs --csv PATH");
            }
            s.csv_path = csv;
            s.center = !no_center;
        } else {
            throw std::invalid_argument("unknown distribution '" + kind + "'");
        }
        return s;
    }
};

void add_dist_options(CLI::App* sub, DistOptions& o) {
    sub->add_option("--dist", o.kind, "coordinate, gaussian or csv")->capture_default_str();
    sub->add_option("--p", o.p, "coordinate: P(+-e1)")->capture_default_str();
    sub->add_option("--sigma", o.sigma, "coordinate: scale of the other axes")->capture_default_str();
    sub->add_option("--d", o.d, "coordinate: dimension")->capture_default_str();
    sub->add_option("--eigenvalues", o.eigenvalues, "gaussian: spectrum, descending")->delimiter(',');
    sub->add_option("--clip", o.clip, "gaussian: bound on ||X||^2 (default 10 trace)");
    sub->add_option("--rotation-seed", o.rotation_seed, "gaussian: random eigenbasis seed");
    sub->add_option("--csv", o.csv, "csv: data file, one sample per row");
    sub->add_flag("--no-center", o.no_center, "csv: do not subtract the sample mean");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Krasulina / Oja incremental PCA experiments and diagnostics"};
    app.require_subcommand(1);
    auto config = std::make_shared<SubcommandConfig>();
    app.config_formatter(config);
    app.set_config("--config", "", "key=value file for the subcommand's options; flags win");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // run
    auto* run = app.add_subcommand("run", "multi-trial convergence experiment");
    DistOptions run_dist;
    add_dist_options(run, run_dist);
    std::vector<std::string> rules{"oja"};
    std::string init = "random_unit";
    std::size_t k = 2;
    std::vector<double> c_values;
    std::vector<double> c_o_values;
    harness::ExperimentConfig base;
    std::string output_dir;
    run->add_option("--rule", rules, "krasulina, oja, block_oja (repeatable)")->delimiter(',');
    run->add_option("--block-p", base.block_p, "block Oja width")->capture_default_str();
    run->add_option("--init", init, "random_unit, first_point, average_k")->capture_default_str();
    run->add_option("--k", k, "points averaged by average_k")->capture_default_str();
    run->add_option("--c", c_values, "learning rate constants (repeatable)")->delimiter(',');
    run->add_option("--c-o", c_o_values, "normalized constants, c = c_o / (2 gap)")->delimiter(',');
    run->add_option("--n-o", base.n_o, "start time")->capture_default_str();
    run->add_option("--horizon", base.horizon, "last step")->capture_default_str();
    run->add_option("--trials", base.trials)->capture_default_str();
    run->add_option("--seed", base.seed)->capture_default_str();
    run->add_option("--grid", base.grid_points, "log-spaced record points")->capture_default_str();
    run->add_option("--threads", base.threads)->capture_default_str();
    run->add_option("--output-dir", output_dir, "default $IPCA_OUTPUT_DIR or ./results");

    // slope
    auto* slope = app.add_subcommand("slope", "log-log slope of an aggregate CSV");
    commands::SlopeOptions slope_opts;
    std::string slope_input;
    std::string slope_out;
    slope->add_option("input", slope_input, "aggregate CSV from run")->required();
    slope->add_option("--column", slope_opts.column)->capture_default_str();
    slope->add_option("--n-min", slope_opts.n_min, "default n_max / 10");
    slope->add_option("--n-max", slope_opts.n_max, "default last n in the file");
    slope->add_option("--out", slope_out, "output file (default stdout)");

    // counterexample
    auto* counter = app.add_subcommand("counterexample", "orthogonality-trap experiment");
    harness::CounterexampleConfig cx;
    std::string cx_init = "first_point";
    std::string cx_rule = "oja";
    std::string cx_out;
    counter->add_option("--p", cx.p)->capture_default_str();
    counter->add_option("--sigma", cx.sigma)->capture_default_str();
    counter->add_option("--d", cx.d)->capture_default_str();
    counter->add_option("--init", cx_init)->capture_default_str();
    counter->add_option("--k", cx.init.k)->capture_default_str();
    counter->add_option("--rule", cx_rule, "krasulina or oja")->capture_default_str();
    counter->add_option("--c-o", cx.c_o)->capture_default_str();
    counter->add_option("--trials", cx.trials)->capture_default_str();
    counter->add_option("--horizon", cx.horizon)->capture_default_str();
    counter->add_option("--seed", cx.seed)->capture_default_str();
    counter->add_option("--threads", cx.threads)->capture_default_str();
    counter->add_option("--threshold", cx.threshold, "final Psi above this is wrong")->capture_default_str();
    counter->add_option("--out", cx_out, "output file (default stdout)");

    // schedule
    auto* sched = app.add_subcommand("schedule", "epoch ladder (j, n_j, eps_j)");
    commands::ScheduleOptions so;
    std::string sched_out;
    sched->add_option("--delta", so.delta)->capture_default_str();
    sched->add_option("--d", so.d)->capture_default_str();
    sched->add_option("--c-o", so.c_o)->capture_default_str();
    sched->add_option("--c", so.c)->capture_default_str();
    sched->add_option("--B", so.B)->capture_default_str();
    sched->add_option("--n-o", so.n_o, "raise the start above the minimum");
    sched->add_option("--out", sched_out, "output file (default stdout)");

    // bound
    auto* bnd = app.add_subcommand("bound", "explicit Krasulina bound as (n, bound)");
    commands::BoundOptions bo;
    std::optional<double> bound_n_o;
    std::string bound_out;
    bnd->add_option("--c-o", bo.params.c_o)->capture_default_str();
    bnd->add_option("--c", bo.params.c)->capture_default_str();
    bnd->add_option("--B", bo.params.B)->capture_default_str();
    bnd->add_option("--d", bo.params.d)->capture_default_str();
    bnd->add_option("--delta", bo.params.delta)->capture_default_str();
    bnd->add_option("--n-o", bound_n_o, "default: the main theorem's start time");
    bnd->add_option("--n-min", bo.n_min, "default n_J, where the bound starts");
    bnd->add_option("--n-max", bo.n_max, "default 100 n_min");
    bnd->add_option("--points", bo.points)->capture_default_str();
    bnd->add_option("--out", bound_out, "output file (default stdout)");

    // verify
    auto* ver = app.add_subcommand("verify", "Monte Carlo and numeric checks; exit 1 on failure");
    std::uint64_t verify_seed = 20240601;
    bool quick = false;
    std::string verify_out;
    ver->add_option("--seed", verify_seed)->capture_default_str();
    ver->add_flag("--quick", quick, "reduced sample sizes");
    ver->add_option("--out", verify_out, "output file (default stdout)");

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
        sub->allow_config_extras(CLI::config_extras_mode::error);
    }
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (app.get_subcommand_no_throw(arg) != nullptr) {
            config->section = arg;
            break;
        }
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            commands::RunOptions ro;
            ro.base = base;
            ro.base.distribution = run_dist.spec();
            ro.base.init = InitSpec{harness::parse_init(init), k};
            for (const std::string& r : rules) {
                ro.rules.push_back(harness::parse_rule(r));
            }
            ro.c_values = c_values;
            ro.c_o_values = c_o_values;
            if (ro.c_values.empty() && ro.c_o_values.empty()) {
                ro.c_o_values = {4.0};
            }
            ro.output_dir = output_dir.empty() ? commands::default_output_dir()
                                               : std::filesystem::path(output_dir);
            commands::run(ro, std::cerr);
        } else if (*slope) {
            slope_opts.input = slope_input;
            Sink sink(slope_out);
            commands::slope(slope_opts, sink.stream());
        } else if (*counter) {
            cx.init.mode = harness::parse_init(cx_init);
            const harness::RuleKind rule = harness::parse_rule(cx_rule);
            if (rule == harness::RuleKind::block_oja) {
                throw std::invalid_argument("counterexample: rule must be krasulina or oja");
            }
            cx.rule = rule == harness::RuleKind::krasulina ? Rule::krasulina : Rule::oja;
            Sink sink(cx_out);
            commands::counterexample(cx, sink.stream());
        } else if (*sched) {
            Sink sink(sched_out);
            commands::schedule(so, sink.stream());
        } else if (*bnd) {
            if (bound_n_o) {
                bo.params.n_o = *bound_n_o;
                bo.n_o_given = true;
            }
            Sink sink(bound_out);
            commands::bound(bo, sink.stream());
        } else if (*ver) {
            Sink sink(verify_out);
            const std::size_t failed = commands::verify(verify_seed, quick, sink.stream());
            if (failed > 0) {
                std::cerr << fmt::format("verify: {} check(s) failed\n", failed);
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
