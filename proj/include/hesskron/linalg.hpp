#ifndef HESSKRON_LINALG_HPP
#define HESSKRON_LINALG_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace hesskron {

using Vector = std::vector<double>;

// Dense real matrix, row-major. All vectorization in this project is
// row-major: vec(M) lists M row by row, which is the unique convention under
// which the layer Hessian equals M (x) xx^T for flattened weights and
// u (x) v = vec(u v^T).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Vector col(std::size_t j) const;
    void set_col(std::size_t j, const Vector& v);

    static Matrix identity(std::size_t n);

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Eigendecomposition result. Values sorted descending; vectors are unit-norm
// columns with the sign fixed so each vector's largest-magnitude component is
// positive (first such index on ties).
struct EigPairs {
    Vector values;
    Matrix vectors;
};

// Implicit symmetric operator v -> A v; `apply` must be symmetric.
struct LinearOperator {
    std::size_t dim = 0;
    std::function<void(const double* in, double* out)> apply;

    Vector operator()(const Vector& v) const;
};

// ---------------------------------------------------------------------------
// Elementwise / BLAS-1 helpers
// ---------------------------------------------------------------------------

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
void axpy(double alpha, const Vector& x, Vector& y);
void scale(double alpha, Vector& v);
Vector operator-(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);

// ---------------------------------------------------------------------------
// BLAS-2/3 style helpers
// ---------------------------------------------------------------------------

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);   // a^T * b
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);   // a * b^T
Vector matvec(const Matrix& a, const Vector& x);
Vector matvec_t(const Matrix& a, const Vector& x);      // a^T * x
Matrix outer(const Vector& u, const Vector& v);
void add_scaled(Matrix& a, const Matrix& b, double alpha); // a += alpha*b
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double spectral_norm_sym(const Matrix& a);              // largest |eigenvalue| of symmetric a

// Wrap a dense symmetric matrix as an implicit operator (copies the matrix).
LinearOperator dense_operator(const Matrix& a);

// ---------------------------------------------------------------------------
// Decompositions
// ---------------------------------------------------------------------------

// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// The input is symmetrized as (A + A^T)/2; asymmetry beyond 1e-8 in max norm
// is a precondition error. Converges when the off-diagonal Frobenius mass
// drops below 1e-12 * ||A||_F.
EigPairs sym_eig_dense(const Matrix& a);

// Top-k eigenpairs of an implicit symmetric operator by Lanczos iteration
// with full reorthogonalization against all stored basis vectors. On Krylov
// breakdown (beta < 1e-12) the iteration continues from a fresh seeded probe,
// at most 3 times. Deterministic for fixed (op, k, iters, seed).
EigPairs lanczos_topk(const LinearOperator& op, std::size_t k, std::size_t iters,
                      std::uint64_t seed);

// Kronecker product, [A (x) B]((i1*Br)+i2, (j1*Bc)+j2) = A(i1,j1)*B(i2,j2).
Matrix kron(const Matrix& a, const Matrix& b, std::size_t dim_cap = 16384);

// Singular values, descending, computed from the eigenvalues of whichever of
// A^T A / A A^T is smaller.
Vector svd_values(const Matrix& a);

// Modified Gram-Schmidt with one re-orthogonalization pass. Columns whose
// residual norm falls below 1e-10 are dropped, so the output may be narrower
// than the input. Surviving columns get the same sign convention as EigPairs.
Matrix orthonormalize(const Matrix& v);

// Fix sign of one vector in place: largest-magnitude component positive.
void fix_sign(Vector& v);
void fix_sign_columns(Matrix& m);

} // namespace hesskron

#endif
