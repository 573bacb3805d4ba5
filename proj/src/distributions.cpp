#include "ipca/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace ipca {

void CoordinateDistribution::validate() const {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("CoordinateDistribution: p must lie in (0,1)");
    }
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw std::invalid_argument("CoordinateDistribution: sigma must lie in (0,1)");
    }
    if (d < 2) {
        throw std::invalid_argument("CoordinateDistribution: d must be >= 2");
    }
    if (!(lambda1() > lambda2())) {
        throw std::invalid_argument("CoordinateDistribution: need p > sigma^2 (1-p)/(d-1)");
    }
}

GaussianSpectrum GaussianSpectrum::make(std::vector<double> eigenvalues,
                                        std::vector<Vector> rotation,
                                        std::optional<double> clip) {
    GaussianSpectrum g;
    g.eigenvalues = std::move(eigenvalues);
    g.rotation = std::move(rotation);
    const double trace = std::accumulate(g.eigenvalues.begin(), g.eigenvalues.end(), 0.0);
    g.clip_radius = clip.value_or(10.0 * trace);
    g.validate();
    return g;
}

void GaussianSpectrum::validate() const {
    if (eigenvalues.size() < 2) {
        throw std::invalid_argument("GaussianSpectrum: need at least two eigenvalues");
    }
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i])) {
            throw std::invalid_argument("GaussianSpectrum: eigenvalues must be positive");
        }
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
            throw std::invalid_argument("GaussianSpectrum: eigenvalues must be descending");
        }
    }
    if (!(eigenvalues[0] > eigenvalues[1])) {
        throw std::invalid_argument("GaussianSpectrum: need eigenvalues[0] > eigenvalues[1]");
    }
    if (!rotation.empty()) {
        if (rotation.size() != eigenvalues.size() ||
            rotation.front().size() != eigenvalues.size()) {
            throw std::invalid_argument("GaussianSpectrum: rotation must be d x d");
        }
        if (orthonormality_error(rotation) > 1e-10) {
            throw std::invalid_argument("GaussianSpectrum: rotation is not orthogonal");
        }
    }
    if (!(clip_radius > 0.0)) {
        throw std::invalid_argument("GaussianSpectrum: clip radius must be positive");
    }
}

DiscreteDistribution::DiscreteDistribution(std::vector<Vector> support, std::vector<double> weights)
    : support_(std::move(support)) {
    if (support_.empty() || support_.size() != weights.size()) {
        throw std::invalid_argument("DiscreteDistribution: need one weight per support point");
    }
    const std::size_t d = support_.front().size();
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (support_[i].size() != d || d == 0 || !all_finite(support_[i])) {
            throw std::invalid_argument("DiscreteDistribution: inconsistent support point");
        }
        if (!(weights[i] >= 0.0)) {
            throw std::invalid_argument("DiscreteDistribution: negative weight");
        }
        total += weights[i];
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("DiscreteDistribution: weights sum to zero");
    }
    probabilities_.reserve(weights.size());
    cumulative_.reserve(weights.size());
    double running = 0.0;
    for (double w : weights) {
        probabilities_.push_back(w / total);
        running += w / total;
        cumulative_.push_back(running);
    }
}

DiscreteDistribution DiscreteDistribution::uniform_over(std::vector<Vector> records) {
    std::vector<double> weights(records.size(), 1.0);
    return DiscreteDistribution(std::move(records), std::move(weights));
}

std::size_t DiscreteDistribution::pick(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(idx, support_.size() - 1);
}

std::size_t dimension(const Source& source) {
    return std::visit(
        [](const auto& s) -> std::size_t {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CoordinateDistribution>) {
                return s.d;
            } else {
                return s.dim();
            }
        },
        source);
}

Vector sample(const CoordinateDistribution& dist, RngStream& rng) {
    Vector x(dist.d);
    const double u = rng.uniform();
    if (u < dist.p) {
        x[0] = u < 0.5 * dist.p ? 1.0 : -1.0;
        return x;
    }
    const auto slots = 2 * (dist.d - 1);
    const double r = (u - dist.p) / (1.0 - dist.p);
    const auto j = std::min(static_cast<std::size_t>(r * static_cast<double>(slots)), slots - 1);
    x[1 + j / 2] = j % 2 == 0 ? dist.sigma : -dist.sigma;
    return x;
}

Vector sample(const GaussianSpectrum& dist, RngStream& rng, SampleCounters* counters) {
    const std::size_t d = dist.dim();
    for (;;) {
        Vector z(d);
        for (std::size_t i = 0; i < d; ++i) {
            z[i] = std::sqrt(dist.eigenvalues[i]) * rng.normal();
        }
        Vector x(d);
        if (dist.rotation.empty()) {
            x = std::move(z);
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                axpy(z[i], dist.rotation[i], x);
            }
        }
        if (norm_squared(x) <= dist.clip_radius) {
            if (counters) {
                ++counters->accepted;
            }
            return x;
        }
        if (counters) {
            ++counters->rejected;
        }
    }
}

Vector sample(const DiscreteDistribution& dist, RngStream& rng) {
    return dist.support()[dist.pick(rng.uniform())];
}

namespace {

double norm_bound(const Source& source) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CoordinateDistribution>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, GaussianSpectrum>) {
                return s.clip_radius;
            } else {
                double b = 0.0;
                for (const Vector& x : s.support()) {
                    b = std::max(b, norm_squared(x));
                }
                return b;
            }
        },
        source);
}

}  // namespace

Vector sample(const Source& source, RngStream& rng, SampleCounters* counters) {
    Vector x = std::visit(
        [&](const auto& s) -> Vector {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianSpectrum>) {
                return sample(s, rng, counters);
            } else {
                if (counters) {
                    ++counters->accepted;
                }
                return sample(s, rng);
            }
        },
        source);
    const double B = norm_bound(source);
    if (norm_squared(x) > B * (1.0 + 1e-12)) {
        throw std::logic_error("sample: ||X||^2 exceeds the source bound B");
    }
    return x;
}

SymMatrix second_moment(const Source& source) {
    return std::visit(
        [](const auto& s) -> SymMatrix {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CoordinateDistribution>) {
                std::vector<double> diag(s.d, s.lambda2());
                diag[0] = s.lambda1();
                return SymMatrix::diagonal(diag);
            } else if constexpr (std::is_same_v<T, GaussianSpectrum>) {
                if (s.rotation.empty()) {
                    return SymMatrix::diagonal(s.eigenvalues);
                }
                return SymMatrix::from_eigen(s.eigenvalues, s.rotation);
            } else {
                SymMatrix m(s.dim());
                for (std::size_t i = 0; i < s.support().size(); ++i) {
                    m.add_outer(s.probabilities()[i], s.support()[i]);
                }
                return m;
            }
        },
        source);
}

GroundTruth ground_truth(const Source& source) {
    GroundTruth truth = std::visit(
        [&](const auto& s) -> GroundTruth {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CoordinateDistribution>) {
                s.validate();
                return {Vector::unit(s.d, 0), s.lambda1(), s.lambda2(), 1.0};
            } else if constexpr (std::is_same_v<T, GaussianSpectrum>) {
                s.validate();
                Vector top = s.rotation.empty() ? Vector::unit(s.dim(), 0) : s.rotation.front();
                canonicalize_sign(top);
                return {std::move(top), s.eigenvalues[0], s.eigenvalues[1], s.clip_radius};
            } else {
                const std::size_t k = std::min<std::size_t>(2, s.dim());
                const EigenPairs eig = top_eigs(second_moment(source), k);
                if (!eig.converged) {
                    throw std::runtime_error("ground_truth: eigen-oracle did not converge");
                }
                return {eig.vectors[0], eig.values[0], k > 1 ? eig.values[1] : 0.0,
                        norm_bound(source)};
            }
        },
        source);
    truth.validate();
    return truth;
}

Vector random_unit_vector(std::size_t d, RngStream& rng) {
    if (d == 0) {
        throw std::invalid_argument("random_unit_vector: d must be >= 1");
    }
    for (;;) {
        Vector z(d);
        for (double& e : z) {
            e = rng.normal();
        }
        if (norm_squared(z) > 0.0) {
            normalize_in_place(z);
            return z;
        }
    }
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_fields(std::string_view line, std::vector<double>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        const auto field = trim(line.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start));
        double value = 0.0;
        const auto* first = field.data();
        const auto* last = field.data() + field.size();
        if (!field.empty() && *first == '+') {
            ++first;
        }
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (field.empty() || ec != std::errc() || ptr != last) {
            return false;
        }
        out.push_back(value);
        if (comma == std::string_view::npos) {
            return true;
        }
        start = comma + 1;
    }
}

}  // namespace

DatasetStream::DatasetStream(std::filesystem::path source, bool center,
                             std::optional<std::size_t> dim)
    : path_(std::move(source)), center_(center), dim_(dim.value_or(0)) {
    open();
    if (center_) {
        Vector sum;
        std::size_t count = 0;
        while (auto x = read_raw()) {
            if (sum.empty()) {
                sum = Vector(x->size());
            }
            axpy(1.0, *x, sum);
            ++count;
        }
        ++passes_;
        if (count > 0) {
            mean_ = (1.0 / static_cast<double>(count)) * sum;
        }
        open();
    } else if (dim_ == 0) {
        // establish the dimension from the first record
        (void)read_raw();
        open();
    }
    if (mean_.empty() && dim_ > 0) {
        mean_ = Vector(dim_);
    }
}

void DatasetStream::open() {
    in_.close();
    in_.clear();
    in_.open(path_);
    if (!in_) {
        throw std::runtime_error("DatasetStream: cannot open " + path_.string());
    }
    line_no_ = 0;
    header_checked_ = false;
}

void DatasetStream::rewind() { open(); }

std::optional<Vector> DatasetStream::read_raw() {
    std::string line;
    std::vector<double> fields;
    while (std::getline(in_, line)) {
        ++line_no_;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        const bool first_row = !header_checked_;
        header_checked_ = true;
        if (!parse_fields(body, fields)) {
            if (first_row) {
                continue;  // header
            }
            throw ParseError("DatasetStream: malformed record in " + path_.string(), line_no_);
        }
        if (dim_ == 0) {
            dim_ = fields.size();
        }
        if (fields.size() != dim_) {
            throw ParseError(fmt::format("DatasetStream: expected {} fields, got {}", dim_,
                                         fields.size()),
                             line_no_);
        }
        Vector x(std::move(fields));
        if (!all_finite(x)) {
            throw ParseError("DatasetStream: non-finite value", line_no_);
        }
        return x;
    }
    return std::nullopt;
}

std::optional<Vector> DatasetStream::next() {
    auto x = read_raw();
    if (!x) {
        ++passes_;
        return std::nullopt;
    }
    if (center_ && !mean_.empty()) {
        axpy(-1.0, mean_, *x);
    }
    return x;
}

EmpiricalGroundTruth empirical_ground_truth(DatasetStream& stream, std::size_t pass_budget) {
    if (pass_budget < 2) {
        throw std::invalid_argument("empirical_ground_truth: pass budget must be >= 2");
    }
    const std::size_t passes_before = stream.passes();
    stream.rewind();
    std::optional<SymMatrix> moment;
    std::size_t count = 0;
    double max_norm2 = 0.0;
    while (auto x = stream.next()) {
        if (!moment) {
            moment.emplace(x->size());
        }
        moment->add_outer(1.0, *x);
        max_norm2 = std::max(max_norm2, norm_squared(*x));
        ++count;
    }
    if (count == 0) {
        throw std::runtime_error("empirical_ground_truth: empty stream " + stream.path().string());
    }
    moment->scale(1.0 / static_cast<double>(count));

    EmpiricalGroundTruth out;
    out.records = count;
    out.passes_used = (stream.centered() ? 1 : 0) + (stream.passes() - passes_before);
    if (out.passes_used > pass_budget) {
        throw std::runtime_error("empirical_ground_truth: pass budget exceeded");
    }
    const std::size_t d = moment->dim();
    const EigenPairs eig = top_eigs(*moment, std::min<std::size_t>(2, d));
    out.converged = eig.converged;
    out.truth.v_star = eig.vectors[0];
    out.truth.lambda1 = eig.values[0];
    out.truth.lambda2 = d > 1 ? std::max(0.0, eig.values[1]) : 0.0;
    out.truth.B = max_norm2;

    if (count < d + 1) {
        out.rank_deficient = true;
        out.warnings.push_back(
            fmt::format("only {} records for dimension {}; covariance is rank deficient", count, d));
    }
    const double l1 = out.truth.lambda1;
    const double l2 = out.truth.lambda2;
    if (!eig.converged || !(l1 - l2 > 1e-10 * l1) || l2 <= 1e-12 * l1) {
        out.degenerate_gap = true;
        out.warnings.push_back(fmt::format(
            "degenerate spectrum: lambda1={:.6g} lambda2={:.6g} converged={}", l1, l2,
            eig.converged));
    }
    return out;
}

std::vector<Vector> load_records(DatasetStream& stream) {
    stream.rewind();
    std::vector<Vector> records;
    while (auto x = stream.next()) {
        records.push_back(std::move(*x));
    }
    return records;
}

void write_ground_truth_csv(std::ostream& out, const GroundTruth& truth) {
    out << "lambda1,lambda2,B";
    for (std::size_t i = 0; i < truth.v_star.size(); ++i) {
        out << ",v" << i;
    }
    out << '\n' << fmt::format("{:.17g},{:.17g},{:.17g}", truth.lambda1, truth.lambda2, truth.B);
    for (double e : truth.v_star) {
        out << fmt::format(",{:.17g}", e);
    }
    out << '\n';
}

GroundTruth read_ground_truth_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> fields;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (!parse_fields(body, fields)) {
                continue;
            }
        } else if (!parse_fields(body, fields)) {
            throw ParseError("ground-truth cache: malformed row", line_no);
        }
        if (fields.size() < 4) {
            throw ParseError("ground-truth cache: need lambda1, lambda2, B and v*", line_no);
        }
        GroundTruth truth;
        truth.lambda1 = fields[0];
        truth.lambda2 = fields[1];
        truth.B = fields[2];
        truth.v_star = Vector(std::vector<double>(fields.begin() + 3, fields.end()));
        truth.validate();
        return truth;
    }
    throw ParseError("ground-truth cache: no data row", line_no);
}

}  // namespace ipca
