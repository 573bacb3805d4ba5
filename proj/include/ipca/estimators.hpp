#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipca/distributions.hpp"
#include "ipca/linalg.hpp"
#include "ipca/rng.hpp"

namespace ipca {

enum class Rule { krasulina, oja };

std::string to_string(Rule rule);

/// gamma_n = c / n for steps n > n_o.
struct LearningRate {
    double c = 1.0;
    std::int64_t n_o = 0;

    double at(std::int64_t n) const;
    void validate() const;
};

/// Single-vector estimator. `n` is the index of the last step taken
/// (n_o right after initialization).
struct EstimatorState {
    Vector v;
    std::int64_t n = 0;
    Rule rule = Rule::oja;
    LearningRate lr;
    /// Krasulina iterates grow in norm; they are rescaled to unit length
    /// once ||v|| exceeds this. Psi is scale invariant so this is invisible.
    static constexpr double renormalize_above = 1e100;
    std::uint64_t renormalizations = 0;
};

/// Oja iterates are normalized on construction.
EstimatorState make_state(Rule rule, Vector v0, LearningRate lr);

/// Top-p frame, columns orthonormal.
struct BlockState {
    std::vector<Vector> columns;
    std::int64_t n = 0;
    LearningRate lr;
    std::uint64_t collapse_events = 0;

    std::size_t dim() const { return columns.front().size(); }
    std::size_t width() const { return columns.size(); }
};

BlockState make_block_state(std::vector<Vector> columns, LearningRate lr);

enum class InitMode { random_unit, first_point, average_k };

struct InitSpec {
    InitMode mode = InitMode::random_unit;
    std::size_t k = 2;  // used by average_k
};

std::string to_string(InitMode mode);

/// Raised when an initializer produces the zero vector, e.g. averaging
/// e_1 and -e_1. The trial should be resampled or marked failed.
struct ZeroInitError : std::domain_error {
    using std::domain_error::domain_error;
};

/// V_{n_o}: a uniform random unit vector, the first data point, or the
/// average of the first k data points (drawn from `source` with `rng`).
Vector init_vector(const InitSpec& spec, std::size_t d, const Source& source, RngStream& rng);

/// xi = (x x^T - (v^ . x)^2 I) v, the Krasulina increment direction.
Vector xi(const Vector& v, const Vector& x);

/// Z = 2 gamma (v . v*)(xi . v*) / ||v||^2.
double z_increment(const Vector& v, const Vector& x, double gamma, const Vector& v_star);

/// v + gamma xi(v, x).
Vector krasulina_update(const Vector& v, const Vector& x, double gamma);

/// (v + gamma x x^T v) / ||v + gamma x x^T v||. Returns v untouched
/// when v . x == 0 exactly.
Vector oja_update(const Vector& v, const Vector& x, double gamma);

/// Advance n by one and apply the rule's update with gamma_n = c/n.
void krasulina_step(EstimatorState& state, const Vector& x);
void oja_step(EstimatorState& state, const Vector& x);
void step(EstimatorState& state, const Vector& x);

/// W = V + gamma x x^T V, then modified Gram-Schmidt. A collapsed column
/// is replaced by a random unit vector drawn from `rng` and the event is
/// counted in `collapse_events`.
void block_oja_step(BlockState& state, const Vector& x, RngStream& rng);

/// p orthonormal columns from Gram-Schmidt on random unit vectors.
std::vector<Vector> random_orthonormal_frame(std::size_t d, std::size_t p, RngStream& rng);

/// Subspace analogue of Psi, (p - ||T^T V||_F^2) / p for target frame T.
/// A diagnostic only; reduces to Psi for p = 1.
double subspace_potential(const std::vector<Vector>& columns, const std::vector<Vector>& target);

}  // namespace ipca
