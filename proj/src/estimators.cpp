#include "ipca/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace ipca {

std::string to_string(Rule rule) { return rule == Rule::krasulina ? "krasulina" : "oja"; }

std::string to_string(InitMode mode) {
    switch (mode) {
    case InitMode::random_unit:
        return "random_unit";
    case InitMode::first_point:
        return "first_point";
    case InitMode::average_k:
        return "average_k";
    }
    return "unknown";
}

double LearningRate::at(std::int64_t n) const {
    if (n < 1 || n <= n_o) {
        throw std::out_of_range("LearningRate: step index must satisfy n >= 1 and n > n_o");
    }
    return c / static_cast<double>(n);
}

void LearningRate::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("LearningRate: c must be positive");
    }
    if (n_o < 0) {
        throw std::invalid_argument("LearningRate: n_o must be >= 0");
    }
}

EstimatorState make_state(Rule rule, Vector v0, LearningRate lr) {
    lr.validate();
    if (!(norm_squared(v0) > 0.0)) {
        throw ZeroInitError("make_state: initial vector is zero");
    }
    if (rule == Rule::oja) {
        normalize_in_place(v0);
    }
    EstimatorState state;
    state.v = std::move(v0);
    state.n = lr.n_o;
    state.rule = rule;
    state.lr = lr;
    return state;
}

BlockState make_block_state(std::vector<Vector> columns, LearningRate lr) {
    lr.validate();
    if (columns.empty()) {
        throw std::invalid_argument("make_block_state: need at least one column");
    }
    if (orthonormality_error(columns) > 1e-10) {
        throw std::invalid_argument("make_block_state: columns are not orthonormal");
    }
    BlockState state;
    state.columns = std::move(columns);
    state.n = lr.n_o;
    state.lr = lr;
    return state;
}

Vector init_vector(const InitSpec& spec, std::size_t d, const Source& source, RngStream& rng) {
    if (spec.mode == InitMode::random_unit) {
        return random_unit_vector(d, rng);
    }
    if (dimension(source) != d) {
        throw std::invalid_argument("init_vector: source dimension mismatch");
    }
    const std::size_t k = spec.mode == InitMode::first_point ? 1 : spec.k;
    if (k == 0) {
        throw std::invalid_argument("init_vector: average_k needs k >= 1");
    }
    Vector sum(d);
    for (std::size_t i = 0; i < k; ++i) {
        axpy(1.0, sample(source, rng), sum);
    }
    if (!(norm_squared(sum) > 0.0)) {
        throw ZeroInitError("init_vector: " + to_string(spec.mode) +
                            " produced the zero vector; resample the initial data");
    }
    if (k > 1) {
        for (double& e : sum) {
            e /= static_cast<double>(k);
        }
    }
    return sum;
}

Vector xi(const Vector& v, const Vector& x) {
    const double nv2 = norm_squared(v);
    if (!(nv2 > 0.0)) {
        throw std::domain_error("xi: zero vector");
    }
    const double vx = dot(v, x);
    const double along = vx * vx / nv2;
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = vx * x[i] - along * v[i];
    }
    return out;
}

double z_increment(const Vector& v, const Vector& x, double gamma, const Vector& v_star) {
    const double nv2 = norm_squared(v);
    if (!(nv2 > 0.0)) {
        throw std::domain_error("z_increment: zero vector");
    }
    return 2.0 * gamma * dot(v, v_star) * dot(xi(v, x), v_star) / nv2;
}

namespace {

void krasulina_apply(Vector& v, const Vector& x, double gamma) {
    const double nv2 = norm_squared(v);
    const double vx = dot(v, x);
    const double along = vx * vx / nv2;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] += gamma * (vx * x[i] - along * v[i]);
    }
}

// Same operation order as block_oja_step (axpy, then normalize_in_place),
// which makes p = 1 block runs bit-identical to this.
void oja_apply(Vector& v, const Vector& x, double gamma) {
    const double vx = dot(v, x);
    if (vx == 0.0) {
        return;
    }
    axpy(gamma * vx, x, v);
    if (!(norm(v) >= 1e-300)) {
        throw std::runtime_error("oja: normalization denominator vanished");
    }
    normalize_in_place(v);
}

}  // namespace

Vector krasulina_update(const Vector& v, const Vector& x, double gamma) {
    if (!(norm_squared(v) > 0.0)) {
        throw std::domain_error("krasulina_update: zero vector");
    }
    Vector out = v;
    krasulina_apply(out, x, gamma);
    return out;
}

Vector oja_update(const Vector& v, const Vector& x, double gamma) {
    Vector out = v;
    oja_apply(out, x, gamma);
    return out;
}

void krasulina_step(EstimatorState& state, const Vector& x) {
    if (state.rule != Rule::krasulina) {
        throw std::logic_error("krasulina_step: state holds a different rule");
    }
    ++state.n;
    krasulina_apply(state.v, x, state.lr.at(state.n));
    if (norm(state.v) > EstimatorState::renormalize_above) {
        normalize_in_place(state.v);
        ++state.renormalizations;
    }
}

void oja_step(EstimatorState& state, const Vector& x) {
    if (state.rule != Rule::oja) {
        throw std::logic_error("oja_step: state holds a different rule");
    }
    ++state.n;
    oja_apply(state.v, x, state.lr.at(state.n));
}

void step(EstimatorState& state, const Vector& x) {
    if (state.rule == Rule::krasulina) {
        krasulina_step(state, x);
    } else {
        oja_step(state, x);
    }
}

void block_oja_step(BlockState& state, const Vector& x, RngStream& rng) {
    ++state.n;
    const double gamma = state.lr.at(state.n);
    std::vector<double> loads(state.width());
    bool any = false;
    for (std::size_t j = 0; j < state.width(); ++j) {
        loads[j] = dot(state.columns[j], x);
        any = any || loads[j] != 0.0;
    }
    if (!any) {
        return;
    }
    for (std::size_t j = 0; j < state.width(); ++j) {
        axpy(gamma * loads[j], x, state.columns[j]);
    }
    const std::size_t d = state.dim();
    state.collapse_events += modified_gram_schmidt(state.columns, 1e-12,
                                                   [&] { return random_unit_vector(d, rng); });
}

std::vector<Vector> random_orthonormal_frame(std::size_t d, std::size_t p, RngStream& rng) {
    if (p == 0 || p > d) {
        throw std::invalid_argument("random_orthonormal_frame: need 1 <= p <= d");
    }
    std::vector<Vector> columns;
    columns.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        columns.push_back(random_unit_vector(d, rng));
    }
    modified_gram_schmidt(columns, 1e-12, [&] { return random_unit_vector(d, rng); });
    return columns;
}

double subspace_potential(const std::vector<Vector>& columns, const std::vector<Vector>& target) {
    if (columns.size() != target.size() || columns.empty()) {
        throw std::invalid_argument("subspace_potential: frames must have equal width");
    }
    double captured = 0.0;
    for (const Vector& t : target) {
        for (const Vector& v : columns) {
            const double c = dot(t, v);
            captured += c * c;
        }
    }
    const double p = static_cast<double>(columns.size());
    return std::clamp((p - captured) / p, 0.0, 1.0);
}

}  // namespace ipca
