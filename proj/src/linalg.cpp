#include "hesskron/linalg.hpp"

#include "hesskron/errors.hpp"
#include "hesskron/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>
#include <string>

namespace hesskron {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw dimension_error("Matrix: data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
}

Vector Matrix::col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_col(std::size_t j, const Vector& v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Vector LinearOperator::operator()(const Vector& v) const {
    if (v.size() != dim) throw dimension_error("LinearOperator: input size mismatch");
    Vector out(dim, 0.0);
    apply(v.data(), out.data());
    return out;
}

// ---------------------------------------------------------------------------
// BLAS-1
// ---------------------------------------------------------------------------

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw dimension_error("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

void axpy(double alpha, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw dimension_error("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, Vector& v) {
    for (double& x : v) x *= alpha;
}

Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw dimension_error("vector -: size mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw dimension_error("vector +: size mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

// ---------------------------------------------------------------------------
// BLAS-2/3
// ---------------------------------------------------------------------------

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw dimension_error("matmul: inner dimension mismatch");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw dimension_error("matmul_at_b: dimension mismatch");
    Matrix c(a.cols(), b.cols(), 0.0);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw dimension_error("matmul_a_bt: dimension mismatch");
    Matrix c(a.rows(), b.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw dimension_error("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
    if (a.rows() != x.size()) throw dimension_error("matvec_t: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * ai[j];
    }
    return y;
}

Matrix outer(const Vector& u, const Vector& v) {
    Matrix m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double* mi = m.row(i);
        for (std::size_t j = 0; j < v.size(); ++j) mi[j] = u[i] * v[j];
    }
    return m;
}

void add_scaled(Matrix& a, const Matrix& b, double alpha) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw dimension_error("add_scaled: shape mismatch");
    double* pa = a.data().data();
    const double* pb = b.data().data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += alpha * pb[i];
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

LinearOperator dense_operator(const Matrix& a) {
    if (a.rows() != a.cols()) throw dimension_error("dense_operator: matrix not square");
    auto mat = std::make_shared<Matrix>(a);
    LinearOperator op;
    op.dim = a.rows();
    op.apply = [mat](const double* in, double* out) {
        const std::size_t n = mat->rows();
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = mat->row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += row[j] * in[j];
            out[i] = s;
        }
    };
    return op;
}

double spectral_norm_sym(const Matrix& a) {
    EigPairs e = sym_eig_dense(a);
    double m = 0.0;
    for (double v : e.values) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// Sign convention
// ---------------------------------------------------------------------------

void fix_sign(Vector& v) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    if (!v.empty() && v[arg] < 0.0) scale(-1.0, v);
}

void fix_sign_columns(Matrix& m) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double a = std::abs(m(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (m(arg, j) < 0.0)
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
    }
}

// ---------------------------------------------------------------------------
// Dense symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

} // namespace

EigPairs sym_eig_dense(const Matrix& input) {
    const std::size_t n = input.rows();
    if (n != input.cols()) throw dimension_error("sym_eig_dense: matrix not square");
    if (!input.all_finite()) throw precondition_error("sym_eig_dense: non-finite entries");

    // Symmetry gate, then work on the symmetrized copy.
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            asym = std::max(asym, std::abs(input(i, j) - input(j, i)));
    if (asym > 1e-8)
        throw precondition_error("sym_eig_dense: asymmetry " + std::to_string(asym) +
                                 " exceeds 1e-8");

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));

    // Eigenvectors accumulated transposed (rows = vectors) so that rotations
    // touch contiguous memory.
    Matrix vt = Matrix::identity(n);

    const double frob = frobenius_norm(a);
    const double tol = 1e-12 * std::max(frob, 1e-300);
    const int max_sweeps = 64;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (offdiag_frobenius(a) <= tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Skip rotations that cannot move anything at double precision.
                if (std::abs(apq) < 1e-300 ||
                    std::abs(apq) <= 1e-18 * (std::abs(app) + std::abs(aqq)))
                    continue;

                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(theta * theta + 1.0))
                                     : 1.0 / (theta - std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                double* rp = a.row(p);
                double* rq = a.row(q);
                for (std::size_t j = 0; j < n; ++j) {
                    const double ajp = rp[j];
                    const double ajq = rq[j];
                    rp[j] = c * ajp - s * ajq;
                    rq[j] = s * ajp + c * ajq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                double* vp = vt.row(p);
                double* vq = vt.row(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = vp[i];
                    const double viq = vq[i];
                    vp[i] = c * vip - s * viq;
                    vq[i] = s * vip + c * viq;
                }
            }
        }
    }
    if (sweep == max_sweeps && offdiag_frobenius(a) > tol)
        throw solver_error("sym_eig_dense: Jacobi did not converge in " +
                           std::to_string(max_sweeps) + " sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigPairs out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        const double* src = vt.row(order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = src[i];
    }
    fix_sign_columns(out.vectors);
    return out;
}

// ---------------------------------------------------------------------------
// Lanczos
// ---------------------------------------------------------------------------

EigPairs lanczos_topk(const LinearOperator& op, std::size_t k, std::size_t iters,
                      std::uint64_t seed) {
    const std::size_t n = op.dim;
    if (k < 1 || k > n) throw precondition_error("lanczos_topk: k out of range");
    if (iters < k) throw precondition_error("lanczos_topk: iters < k");
    iters = std::min(iters, n);

    std::vector<Vector> basis;
    basis.reserve(iters);
    Vector alpha;
    Vector beta; // beta[j] couples basis[j] and basis[j+1]

    auto fresh_probe = [&](std::uint64_t probe_id) {
        SplitMix64 rng(SplitMix64::derive(seed, probe_id));
        Vector v(n);
        for (double& x : v) x = rng.next_gaussian();
        // Two-pass orthogonalization against the stored basis.
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : basis) axpy(-dot(q, v), q, v);
        const double nv = norm(v);
        if (nv < 1e-12) return false;
        scale(1.0 / nv, v);
        basis.push_back(std::move(v));
        return true;
    };

    if (!fresh_probe(0)) throw solver_error("lanczos_topk: degenerate start vector");

    // Invariant at loop head: basis.size() == alpha.size() + 1.
    int restarts = 0;
    Vector w(n);
    while (alpha.size() < iters) {
        const std::size_t j = alpha.size();
        op.apply(basis[j].data(), w.data());
        if (!std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x); }))
            throw solver_error("lanczos_topk: operator produced non-finite values");

        const double a_j = dot(basis[j], w);
        alpha.push_back(a_j);
        axpy(-a_j, basis[j], w);
        if (j > 0) axpy(-beta[j - 1], basis[j - 1], w);
        // Full reorthogonalization, two passes.
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : basis) axpy(-dot(q, w), q, w);

        if (alpha.size() == iters) break;

        const double b_j = norm(w);
        if (b_j < 1e-12) {
            // Invariant subspace found; continue from a fresh probe.
            if (++restarts > 3) {
                if (alpha.size() >= k) break; // spectrum already resolved
                throw solver_error("lanczos_topk: repeated Krylov breakdown");
            }
            beta.push_back(0.0);
            if (!fresh_probe(static_cast<std::uint64_t>(restarts))) {
                beta.pop_back();
                break; // space exhausted
            }
            continue;
        }
        beta.push_back(b_j);
        Vector next = w;
        scale(1.0 / b_j, next);
        basis.push_back(std::move(next));
    }

    const std::size_t m = alpha.size();
    if (m < k) throw solver_error("lanczos_topk: Krylov space smaller than k");

    Matrix t(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) {
            t(i, i + 1) = beta[i];
            t(i + 1, i) = beta[i];
        }
    }
    EigPairs ritz = sym_eig_dense(t);

    EigPairs out;
    out.values.assign(ritz.values.begin(), ritz.values.begin() + k);
    out.vectors = Matrix(n, k);
    for (std::size_t r = 0; r < k; ++r) {
        Vector v(n, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double y = ritz.vectors(j, r);
            if (y != 0.0) axpy(y, basis[j], v);
        }
        const double nv = norm(v);
        if (nv > 0.0) scale(1.0 / nv, v);
        fix_sign(v);
        out.vectors.set_col(r, v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kronecker product
// ---------------------------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b, std::size_t dim_cap) {
    const std::size_t rows = a.rows() * b.rows();
    const std::size_t cols = a.cols() * b.cols();
    if (rows > dim_cap || cols > dim_cap)
        throw capacity_error("kron: output " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " exceeds cap " +
                             std::to_string(dim_cap));
    Matrix out(rows, cols);
    for (std::size_t i1 = 0; i1 < a.rows(); ++i1)
        for (std::size_t j1 = 0; j1 < a.cols(); ++j1) {
            const double aij = a(i1, j1);
            for (std::size_t i2 = 0; i2 < b.rows(); ++i2) {
                double* dst = out.row(i1 * b.rows() + i2) + j1 * b.cols();
                const double* src = b.row(i2);
                for (std::size_t j2 = 0; j2 < b.cols(); ++j2) dst[j2] = aij * src[j2];
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Singular values
// ---------------------------------------------------------------------------

Vector svd_values(const Matrix& a) {
    const bool use_ata = a.cols() <= a.rows();
    Matrix gram = use_ata ? matmul_at_b(a, a) : matmul_a_bt(a, a);
    EigPairs e = sym_eig_dense(gram);
    Vector sv(e.values.size());
    for (std::size_t i = 0; i < sv.size(); ++i) sv[i] = std::sqrt(std::max(0.0, e.values[i]));
    return sv;
}

// ---------------------------------------------------------------------------
// Orthonormalization
// ---------------------------------------------------------------------------

Matrix orthonormalize(const Matrix& v) {
    const std::size_t n = v.rows();
    std::vector<Vector> kept;
    kept.reserve(v.cols());
    for (std::size_t j = 0; j < v.cols(); ++j) {
        Vector w = v.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : kept) axpy(-dot(q, w), q, w);
        const double nw = norm(w);
        if (nw < 1e-10) continue;
        scale(1.0 / nw, w);
        fix_sign(w);
        kept.push_back(std::move(w));
    }
    Matrix out(n, kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) out.set_col(j, kept[j]);
    return out;
}

} // namespace hesskron
