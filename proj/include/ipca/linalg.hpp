#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace ipca {

/// Dense real vector. Entries are expected to stay finite; the
/// arithmetic helpers below never check, callers that ingest external
/// data use all_finite().
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim, double value = 0.0) : entries_(dim, value) {}
    Vector(std::initializer_list<double> values) : entries_(values) {}
    explicit Vector(std::vector<double> values) : entries_(std::move(values)) {}

    static Vector unit(std::size_t dim, std::size_t axis);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    double& operator[](std::size_t i) { return entries_[i]; }
    double operator[](std::size_t i) const { return entries_[i]; }

    std::span<double> values() noexcept { return entries_; }
    std::span<const double> values() const noexcept { return entries_; }

    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    bool operator==(const Vector&) const = default;

private:
    std::vector<double> entries_;
};

double dot(const Vector& a, const Vector& b);
double norm_squared(const Vector& v);
double norm(const Vector& v);
bool all_finite(const Vector& v);

// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);

Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double alpha, const Vector& v);

/// Divides every entry by the Euclidean norm and returns that norm.
/// Throws std::domain_error for the zero vector.
double normalize_in_place(Vector& v);
Vector normalized(Vector v);

/// Flips the sign so the first entry with magnitude above `zero_tol`
/// is positive. Used to make eigenvectors deterministic.
void canonicalize_sign(Vector& v, double zero_tol = 1e-12);

/// Dense symmetric matrix, row-major storage. Mutation goes through
/// set()/add_outer() so that symmetry is preserved exactly.
class SymMatrix {
public:
    explicit SymMatrix(std::size_t dim);

    static SymMatrix identity(std::size_t dim);
    static SymMatrix diagonal(std::span<const double> diag);
    /// Validates that `rows` is square, finite and symmetric to 1e-12 relative.
    static SymMatrix from_rows(const std::vector<std::vector<double>>& rows);
    /// Q diag(eigenvalues) Q^T with Q given by orthonormal columns.
    static SymMatrix from_eigen(std::span<const double> eigenvalues,
                                const std::vector<Vector>& columns);

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
    void set(std::size_t i, std::size_t j, double value);

    // this += weight * x x^T
    void add_outer(double weight, const Vector& x);
    void scale(double alpha);

    Vector apply(const Vector& v) const;
    double quadratic_form(const Vector& v) const;
    double frobenius_norm() const;
    double trace() const;

private:
    std::size_t dim_;
    std::vector<double> entries_;
};

/// The target: top eigenvector of the covariance,
/// the top two eigenvalues, and the bound B on ||X||^2.
struct GroundTruth {
    Vector v_star;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double B = 0.0;

    double gap() const { return lambda1 - lambda2; }
    /// Throws std::invalid_argument if ||v_star|| != 1, lambda1 <= lambda2 or B <= 0.
    void validate() const;
};

/// G(v) = v^T A v / v^T v.
double rayleigh_quotient(const SymMatrix& A, const Vector& v);

/// (2/||v||^2) (A - G(v) I) v.
Vector rayleigh_gradient(const SymMatrix& A, const Vector& v);

/// Psi = 1 - (v . v*)^2 / ||v||^2, computed from the component of v
/// orthogonal to v* so that small values keep full relative accuracy.
double potential(const Vector& v, const Vector& v_star);

struct EigenPairs {
    std::vector<double> values;   // descending
    std::vector<Vector> vectors;  // unit, sign-canonical
    std::vector<double> residuals;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Top-k eigenpairs of a positive semidefinite matrix by power iteration
/// with Hotelling deflation. Converged means every returned pair has
/// ||Av - lambda v|| <= tol * ||A||_F. A non-converged result is still
/// returned (with converged = false) so callers can flag it.
EigenPairs top_eigs(const SymMatrix& A, std::size_t k, double tol = 1e-10,
                    std::size_t max_iter = 100000);

/// Modified Gram-Schmidt with one re-orthogonalization sweep, in place,
/// column order preserved. A column whose norm falls below `collapse_tol`
/// after projection is replaced by `replacement()` and processed again;
/// without a replacement callback a collapse throws std::domain_error.
/// Returns the number of replacements.
std::size_t modified_gram_schmidt(std::vector<Vector>& columns, double collapse_tol = 1e-12,
                                  const std::function<Vector()>& replacement = {});

/// max_{i,j} |(V^T V - I)_{ij}|.
double orthonormality_error(const std::vector<Vector>& columns);

}  // namespace ipca
