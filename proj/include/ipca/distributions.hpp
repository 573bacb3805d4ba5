#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ipca/linalg.hpp"
#include "ipca/rng.hpp"

namespace ipca {

/// The 2d-point distribution on {+-e_1, +-sigma e_2, ..., +-sigma e_d}:
/// P(+-e_1) = p/2 each, P(+-sigma e_i) = (1-p)/(2(d-1)) each for i > 1.
struct CoordinateDistribution {
    double p = 0.2;
    double sigma = 0.5;
    std::size_t d = 10;

    double lambda1() const { return p; }
    double lambda2() const { return sigma * sigma * (1.0 - p) / static_cast<double>(d - 1); }
    /// Throws std::invalid_argument unless 0<p<1, 0<sigma<1, d>=2 and lambda1 > lambda2.
    void validate() const;
};

/// N(0, Q diag(eigenvalues) Q^T) conditioned on ||X||^2 <= clip_radius
/// (rejection sampling), so that B = clip_radius holds exactly.
struct GaussianSpectrum {
    std::vector<double> eigenvalues;   // descending, > 0, strict top gap
    std::vector<Vector> rotation;      // orthonormal columns; empty means identity
    double clip_radius = 0.0;

    /// clip defaults to 10 * trace(diag(eigenvalues)).
    static GaussianSpectrum make(std::vector<double> eigenvalues,
                                 std::vector<Vector> rotation = {},
                                 std::optional<double> clip = std::nullopt);
    std::size_t dim() const { return eigenvalues.size(); }
    void validate() const;
};

/// Finite support with arbitrary weights. Backs resampling of file data
/// and small hand-built test distributions.
class DiscreteDistribution {
public:
    DiscreteDistribution(std::vector<Vector> support, std::vector<double> weights);
    static DiscreteDistribution uniform_over(std::vector<Vector> records);

    std::size_t dim() const { return support_.front().size(); }
    const std::vector<Vector>& support() const { return support_; }
    const std::vector<double>& probabilities() const { return probabilities_; }
    std::size_t pick(double u) const;

private:
    std::vector<Vector> support_;
    std::vector<double> probabilities_;
    std::vector<double> cumulative_;
};

using Source = std::variant<CoordinateDistribution, GaussianSpectrum, DiscreteDistribution>;

std::size_t dimension(const Source& source);

/// Per-trial bookkeeping for sources that reject draws.
struct SampleCounters {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    double rejection_rate() const {
        const auto total = accepted + rejected;
        return total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
    }
};

Vector sample(const CoordinateDistribution& dist, RngStream& rng);
Vector sample(const GaussianSpectrum& dist, RngStream& rng, SampleCounters* counters = nullptr);
Vector sample(const DiscreteDistribution& dist, RngStream& rng);
/// One i.i.d. draw; asserts ||X||^2 <= B for the source's B.
Vector sample(const Source& source, RngStream& rng, SampleCounters* counters = nullptr);

/// Exact second-moment matrix E[X X^T] (the covariance, all sources are
/// mean zero or centered). For GaussianSpectrum this is Q diag Q^T; the
/// clipping correction is ignored, it is below 1e-15 at the default radius.
SymMatrix second_moment(const Source& source);

/// Exact (v*, lambda1, lambda2, B). Discrete sources go through top_eigs.
GroundTruth ground_truth(const Source& source);

/// Uniform on the unit sphere: a standard normal vector, normalized.
Vector random_unit_vector(std::size_t d, RngStream& rng);

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    std::size_t line;
};

/// CSV records, one sample per row, optional header row, '#' comment
/// lines and blank lines ignored. With `center` set, a preliminary pass
/// computes the mean, which is then subtracted from every record.
class DatasetStream {
public:
    DatasetStream(std::filesystem::path source, bool center,
                  std::optional<std::size_t> dim = std::nullopt);

    /// Next record, or nullopt at end of stream. Throws ParseError on a
    /// malformed record.
    std::optional<Vector> next();
    void rewind();

    std::size_t dim() const { return dim_; }
    bool centered() const { return center_; }
    const Vector& mean() const { return mean_; }
    std::size_t passes() const { return passes_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::optional<Vector> read_raw();
    void open();

    std::filesystem::path path_;
    bool center_;
    std::size_t dim_ = 0;
    Vector mean_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
    std::size_t passes_ = 0;
    bool header_checked_ = false;
};

struct EmpiricalGroundTruth {
    GroundTruth truth;
    std::size_t records = 0;
    std::size_t passes_used = 0;
    bool rank_deficient = false;   // fewer than d+1 records
    bool degenerate_gap = false;   // top pairs not separated or oracle did not converge
    bool converged = true;
    std::vector<std::string> warnings;
};

/// Second-moment matrix of the (centered) stream in one pass, top
/// eigenpairs via top_eigs, B = max observed ||X||^2. Unlike
/// GroundTruth::validate(), a degenerate spectrum is reported through the
/// flags rather than thrown. Throws on an empty stream.
EmpiricalGroundTruth empirical_ground_truth(DatasetStream& stream, std::size_t pass_budget = 2);

/// Reads every remaining record from a rewound stream.
std::vector<Vector> load_records(DatasetStream& stream);

/// Ground-truth cache: header "lambda1,lambda2,B,v0,...,v{d-1}" and one row.
void write_ground_truth_csv(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth_csv(std::istream& in);

}  // namespace ipca
