#include "ipca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ipca {

namespace {

void require_same_size(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
    }
}

void require_nonzero(double norm_sq, const char* what) {
    if (!(norm_sq > 0.0)) {
        throw std::domain_error(std::string(what) + ": zero vector");
    }
}

}  // namespace

Vector Vector::unit(std::size_t dim, std::size_t axis) {
    if (axis >= dim) {
        throw std::out_of_range("Vector::unit: axis out of range");
    }
    Vector e(dim);
    e[axis] = 1.0;
    return e;
}

double dot(const Vector& a, const Vector& b) {
    require_same_size(a, b, "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double norm_squared(const Vector& v) {
    double sum = 0.0;
    for (double e : v) {
        sum += e * e;
    }
    return sum;
}

double norm(const Vector& v) { return std::sqrt(norm_squared(v)); }

bool all_finite(const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

void axpy(double alpha, const Vector& x, Vector& y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += alpha * x[i];
    }
}

Vector operator+(const Vector& a, const Vector& b) {
    Vector out = a;
    axpy(1.0, b, out);
    return out;
}

Vector operator-(const Vector& a, const Vector& b) {
    Vector out = a;
    axpy(-1.0, b, out);
    return out;
}

Vector operator*(double alpha, const Vector& v) {
    Vector out = v;
    for (double& e : out) {
        e *= alpha;
    }
    return out;
}

double normalize_in_place(Vector& v) {
    const double n = norm(v);
    require_nonzero(n, "normalize");
    for (double& e : v) {
        e /= n;
    }
    return n;
}

Vector normalized(Vector v) {
    normalize_in_place(v);
    return v;
}

void canonicalize_sign(Vector& v, double zero_tol) {
    for (double e : v) {
        if (std::abs(e) > zero_tol) {
            if (e < 0.0) {
                for (double& f : v) {
                    f = -f;
                }
            }
            return;
        }
    }
}

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), entries_(dim * dim, 0.0) {
    if (dim == 0) {
        throw std::invalid_argument("SymMatrix: dimension must be >= 1");
    }
}

SymMatrix SymMatrix::identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m.entries_[i * dim + i] = 1.0;
    }
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
    SymMatrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m.entries_[i * diag.size() + i] = diag[i];
    }
    return m;
}

SymMatrix SymMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    SymMatrix m(rows.size());
    const std::size_t n = rows.size();
    double scale = 0.0;
    for (const auto& row : rows) {
        if (row.size() != n) {
            throw std::invalid_argument("SymMatrix::from_rows: matrix is not square");
        }
        for (double e : row) {
            if (!std::isfinite(e)) {
                throw std::invalid_argument("SymMatrix::from_rows: non-finite entry");
            }
            scale = std::max(scale, std::abs(e));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(rows[i][j] - rows[j][i]) > 1e-12 * scale) {
                throw std::invalid_argument("SymMatrix::from_rows: matrix is not symmetric");
            }
            // average the two triangles so the stored matrix is exactly symmetric
            m.entries_[i * n + j] = 0.5 * (rows[i][j] + rows[j][i]);
        }
    }
    return m;
}

SymMatrix SymMatrix::from_eigen(std::span<const double> eigenvalues,
                                const std::vector<Vector>& columns) {
    if (eigenvalues.size() != columns.size() || columns.empty()) {
        throw std::invalid_argument("SymMatrix::from_eigen: need one column per eigenvalue");
    }
    SymMatrix m(columns.front().size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
        m.add_outer(eigenvalues[k], columns[k]);
    }
    return m;
}

void SymMatrix::set(std::size_t i, std::size_t j, double value) {
    entries_[i * dim_ + j] = value;
    entries_[j * dim_ + i] = value;
}

void SymMatrix::add_outer(double weight, const Vector& x) {
    if (x.size() != dim_) {
        throw std::invalid_argument("SymMatrix::add_outer: dimension mismatch");
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        const double wi = weight * x[i];
        for (std::size_t j = i; j < dim_; ++j) {
            const double value = entries_[i * dim_ + j] + wi * x[j];
            entries_[i * dim_ + j] = value;
            entries_[j * dim_ + i] = value;
        }
    }
}

void SymMatrix::scale(double alpha) {
    for (double& e : entries_) {
        e *= alpha;
    }
}

Vector SymMatrix::apply(const Vector& v) const {
    if (v.size() != dim_) {
        throw std::invalid_argument("SymMatrix::apply: dimension mismatch");
    }
    Vector out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        double sum = 0.0;
        const double* row = &entries_[i * dim_];
        for (std::size_t j = 0; j < dim_; ++j) {
            sum += row[j] * v[j];
        }
        out[i] = sum;
    }
    return out;
}

double SymMatrix::quadratic_form(const Vector& v) const { return dot(v, apply(v)); }

double SymMatrix::frobenius_norm() const {
    double sum = 0.0;
    for (double e : entries_) {
        sum += e * e;
    }
    return std::sqrt(sum);
}

double SymMatrix::trace() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        sum += entries_[i * dim_ + i];
    }
    return sum;
}

void GroundTruth::validate() const {
    if (v_star.empty() || std::abs(norm(v_star) - 1.0) > 1e-12) {
        throw std::invalid_argument("GroundTruth: v_star must have unit norm");
    }
    if (!(lambda1 > lambda2)) {
        throw std::invalid_argument("GroundTruth: lambda1 must exceed lambda2");
    }
    if (!(B > 0.0)) {
        throw std::invalid_argument("GroundTruth: B must be positive");
    }
}

double rayleigh_quotient(const SymMatrix& A, const Vector& v) {
    const double nv2 = norm_squared(v);
    require_nonzero(nv2, "rayleigh_quotient");
    return A.quadratic_form(v) / nv2;
}

Vector rayleigh_gradient(const SymMatrix& A, const Vector& v) {
    const double nv2 = norm_squared(v);
    require_nonzero(nv2, "rayleigh_gradient");
    Vector av = A.apply(v);
    const double g = dot(v, av) / nv2;
    axpy(-g, v, av);
    for (double& e : av) {
        e *= 2.0 / nv2;
    }
    return av;
}

double potential(const Vector& v, const Vector& v_star) {
    const double nv2 = norm_squared(v);
    require_nonzero(nv2, "potential");
    const double along = dot(v, v_star);
    double perp2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = v[i] - along * v_star[i];
        perp2 += r * r;
    }
    return std::clamp(perp2 / nv2, 0.0, 1.0);
}

namespace {

void project_out(Vector& w, const std::vector<Vector>& basis) {
    for (const Vector& q : basis) {
        axpy(-dot(q, w), q, w);
    }
}

Vector starting_vector(std::size_t dim, const std::vector<Vector>& found) {
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        v[i] = 1.0 + 0.01 * static_cast<double>(i);
    }
    project_out(v, found);
    project_out(v, found);
    if (norm(v) > 1e-8) {
        return normalized(std::move(v));
    }
    // the default start lies in span(found); pick the first axis that does not
    for (std::size_t axis = 0; axis < dim; ++axis) {
        Vector e = Vector::unit(dim, axis);
        project_out(e, found);
        project_out(e, found);
        if (norm(e) > 1e-8) {
            return normalized(std::move(e));
        }
    }
    throw std::domain_error("top_eigs: no starting vector outside the found subspace");
}

}  // namespace

EigenPairs top_eigs(const SymMatrix& A, std::size_t k, double tol, std::size_t max_iter) {
    if (k == 0 || k > A.dim()) {
        throw std::invalid_argument("top_eigs: need 1 <= k <= dim");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("top_eigs: tol must be positive");
    }
    const double scale = A.frobenius_norm();
    const double threshold = tol * scale;

    EigenPairs out;
    out.converged = true;
    SymMatrix deflated = A;
    for (std::size_t pair = 0; pair < k; ++pair) {
        Vector v = starting_vector(A.dim(), out.vectors);
        double lambda = 0.0;
        double residual = 0.0;
        bool done = false;
        for (std::size_t it = 0; it < max_iter; ++it) {
            ++out.iterations;
            Vector av = A.apply(v);
            lambda = dot(v, av);
            Vector r = av;
            axpy(-lambda, v, r);
            residual = norm(r);
            if (residual <= threshold) {
                done = true;
                break;
            }
            Vector w = deflated.apply(v);
            project_out(w, out.vectors);
            if (norm(w) <= 1e-300) {
                break;
            }
            normalize_in_place(w);
            v = std::move(w);
        }
        canonicalize_sign(v);
        out.converged = out.converged && done;
        deflated.add_outer(-lambda, v);
        out.values.push_back(lambda);
        out.vectors.push_back(std::move(v));
        out.residuals.push_back(residual);
    }
    return out;
}

std::size_t modified_gram_schmidt(std::vector<Vector>& columns, double collapse_tol,
                                  const std::function<Vector()>& replacement) {
    std::size_t replaced = 0;
    for (std::size_t k = 0; k < columns.size(); ++k) {
        for (;;) {
            Vector& w = columns[k];
            for (int sweep = 0; sweep < 2 && k > 0; ++sweep) {
                for (std::size_t j = 0; j < k; ++j) {
                    axpy(-dot(columns[j], w), columns[j], w);
                }
            }
            if (norm(w) >= collapse_tol) {
                normalize_in_place(w);
                break;
            }
            if (!replacement) {
                throw std::domain_error("modified_gram_schmidt: column " + std::to_string(k) +
                                        " collapsed");
            }
            w = replacement();
            ++replaced;
        }
    }
    return replaced;
}

double orthonormality_error(const std::vector<Vector>& columns) {
    double worst = 0.0;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        for (std::size_t j = i; j < columns.size(); ++j) {
            const double target = i == j ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot(columns[i], columns[j]) - target));
        }
    }
    return worst;
}

}  // namespace ipca
