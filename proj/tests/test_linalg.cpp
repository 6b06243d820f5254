#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hesskron/errors.hpp"
#include "hesskron/linalg.hpp"
#include "hesskron/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace hesskron;

namespace {

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double x = rng.next_uniform(-1.0, 1.0);
            a(i, j) = x;
            a(j, i) = x;
        }
    return a;
}

Matrix random_psd(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Matrix b(n, n);
    for (double& x : b.data()) x = rng.next_gaussian();
    return matmul_at_b(b, b);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Matrix a(rows, cols);
    for (double& x : a.data()) x = rng.next_gaussian();
    return a;
}

// Projector onto the column span of V, built from the normal equations;
// independent of orthonormalize's output basis.
Matrix span_projector(const Matrix& v) {
    Matrix g = matmul_at_b(v, v);
    EigPairs e = sym_eig_dense(g);
    // pseudo-inverse of the small Gram matrix
    Matrix ginv(g.rows(), g.cols(), 0.0);
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        if (e.values[k] <= 1e-12 * e.values[0]) continue;
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j)
                ginv(i, j) += e.vectors(i, k) * e.vectors(j, k) / e.values[k];
    }
    return matmul(matmul(v, ginv), transpose(v));
}

} // namespace

TEST_CASE("sym_eig_dense diagonal case") {
    Matrix a(3, 3);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    a(2, 2) = 2.0;
    EigPairs e = sym_eig_dense(a);
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.values[2] == doctest::Approx(1.0).epsilon(1e-12));
    // permuted identity columns: (e0, e2, e1)
    CHECK(e.vectors(0, 0) == doctest::Approx(1.0));
    CHECK(e.vectors(2, 1) == doctest::Approx(1.0));
    CHECK(e.vectors(1, 2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig_dense identity") {
    EigPairs e = sym_eig_dense(Matrix::identity(4));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sym_eig_dense reconstruction oracle 50x50") {
    Matrix a = random_symmetric(50, 1234);
    EigPairs e = sym_eig_dense(a);
    // rebuild V diag(lambda) V^T
    Matrix recon(50, 50, 0.0);
    for (std::size_t k = 0; k < 50; ++k)
        for (std::size_t i = 0; i < 50; ++i)
            for (std::size_t j = 0; j < 50; ++j)
                recon(i, j) += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 50; ++j)
            CHECK(std::abs(recon(i, j) - a(i, j)) <= 1e-8);
}

TEST_CASE("sym_eig_dense residual invariant up to 300x300") {
    for (std::size_t n : {7, 60, 300}) {
        Matrix a = random_symmetric(n, 77 + n);
        EigPairs e = sym_eig_dense(a);
        const double bound = 1e-8 * std::max(1.0, frobenius_norm(a));
        for (std::size_t k = 0; k < n; ++k) {
            Vector v = e.vectors.col(k);
            Vector av = matvec(a, v);
            axpy(-e.values[k], v, av);
            CHECK(norm(av) <= bound);
        }
        // orthonormality of the eigenvector matrix
        Matrix vtv = matmul_at_b(e.vectors, e.vectors);
        add_scaled(vtv, Matrix::identity(n), -1.0);
        CHECK(max_abs(vtv) <= 1e-8);
        // descending order
        CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
    }
}

TEST_CASE("sym_eig_dense errors") {
    CHECK_THROWS_AS(sym_eig_dense(Matrix(3, 4)), dimension_error);
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    a(1, 0) = 0.5; // asymmetric
    CHECK_THROWS_AS(sym_eig_dense(a), precondition_error);
}

TEST_CASE("lanczos_topk on diagonal operator") {
    Matrix d(10, 10);
    for (std::size_t i = 0; i < 10; ++i) d(i, i) = 10.0 - static_cast<double>(i);
    EigPairs e = lanczos_topk(dense_operator(d), 3, 10, 42);
    CHECK(e.values[0] == doctest::Approx(10.0).epsilon(1e-10));
    CHECK(e.values[1] == doctest::Approx(9.0).epsilon(1e-10));
    CHECK(e.values[2] == doctest::Approx(8.0).epsilon(1e-10));
}

TEST_CASE("lanczos_topk matches dense eig on 500-dim PSD") {
    Matrix a = random_psd(500, 999);
    EigPairs dense = sym_eig_dense(a);
    EigPairs lz = lanczos_topk(dense_operator(a), 10, 120, 7);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(std::abs(lz.values[i] - dense.values[i]) <= 1e-6 * std::abs(dense.values[i]));
}

TEST_CASE("lanczos_topk k = dim recovers the full spectrum") {
    Matrix a = random_symmetric(40, 4040);
    EigPairs dense = sym_eig_dense(a);
    EigPairs lz = lanczos_topk(dense_operator(a), 40, 40, 3);
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(std::abs(lz.values[i] - dense.values[i]) <=
              1e-6 * std::max(1.0, std::abs(dense.values[i])));
}

TEST_CASE("lanczos_topk determinism") {
    Matrix a = random_psd(80, 321);
    LinearOperator op = dense_operator(a);
    EigPairs e1 = lanczos_topk(op, 5, 40, 11);
    EigPairs e2 = lanczos_topk(op, 5, 40, 11);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::abs(e1.values[i] - e2.values[i]) <= 1e-12);
}

TEST_CASE("lanczos_topk survives breakdown on a low-rank operator") {
    // rank-2 PSD matrix in dimension 12: Krylov space collapses quickly
    Matrix b = random_matrix(2, 12, 5);
    Matrix a = matmul_at_b(b, b);
    EigPairs dense = sym_eig_dense(a);
    EigPairs lz = lanczos_topk(dense_operator(a), 4, 12, 19);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(lz.values[i] - dense.values[i]) <=
              1e-8 * std::max(1.0, std::abs(dense.values[0])));
}

TEST_CASE("kron block structure and bilinearity") {
    Matrix b = random_matrix(3, 2, 8);
    Matrix i2 = Matrix::identity(2);
    Matrix k = kron(i2, b);
    REQUIRE(k.rows() == 6);
    REQUIRE(k.cols() == 4);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(k(i, j) == b(i, j));
            CHECK(k(3 + i, 2 + j) == b(i, j));
            CHECK(k(3 + i, j) == 0.0);
            CHECK(k(i, 2 + j) == 0.0);
        }

    // Bilinearity is exact; checked on integer-valued matrices where all
    // intermediate products are representable.
    SplitMix64 rng(2122);
    Matrix a1(3, 3), a2(3, 3), bi(3, 2);
    for (double& x : a1.data()) x = static_cast<double>(rng.next_below(7)) - 3.0;
    for (double& x : a2.data()) x = static_cast<double>(rng.next_below(7)) - 3.0;
    for (double& x : bi.data()) x = static_cast<double>(rng.next_below(7)) - 3.0;
    Matrix sum = a1;
    add_scaled(sum, a2, 1.0);
    Matrix lhs = kron(sum, bi);
    Matrix rhs = kron(a1, bi);
    add_scaled(rhs, kron(a2, bi), 1.0);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs.data()[i] == rhs.data()[i]); // exact
}

TEST_CASE("kron rank-1 eigenpair") {
    Vector u{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    Vector v{0.6, 0.8};
    const double a = 3.0, b = 0.5;
    Matrix auu = outer(u, u);
    for (double& x : auu.data()) x *= a;
    Matrix bvv = outer(v, v);
    for (double& x : bvv.data()) x *= b;
    EigPairs e = sym_eig_dense(kron(auu, bvv));
    CHECK(e.values[0] == doctest::Approx(a * b).epsilon(1e-12));
    for (std::size_t i = 1; i < e.values.size(); ++i)
        CHECK(std::abs(e.values[i]) <= 1e-12);
    // eigenvector is u (x) v
    Vector uv(4);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) uv[i * 2 + j] = u[i] * v[j];
    fix_sign(uv);
    const double align = std::abs(dot(uv, e.vectors.col(0)));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kron spectrum equals eigenvalue products (6x6 (x) 5x5)") {
    Matrix a = random_psd(6, 61);
    Matrix b = random_psd(5, 51);
    EigPairs ea = sym_eig_dense(a);
    EigPairs eb = sym_eig_dense(b);
    Vector products;
    for (double x : ea.values)
        for (double y : eb.values) products.push_back(x * y);
    std::sort(products.rbegin(), products.rend());
    EigPairs ek = sym_eig_dense(kron(a, b));
    for (std::size_t i = 0; i < products.size(); ++i)
        CHECK(std::abs(ek.values[i] - products[i]) <= 1e-10 * std::max(1.0, products[0]));
}

TEST_CASE("kron mixed-product property on 3x3 blocks") {
    Matrix a = random_matrix(3, 3, 1);
    Matrix b = random_matrix(3, 3, 2);
    Matrix c = random_matrix(3, 3, 3);
    Matrix d = random_matrix(3, 3, 4);
    Matrix lhs = matmul(kron(a, b), kron(c, d));
    Matrix rhs = kron(matmul(a, c), matmul(b, d));
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs.data()[i] == doctest::Approx(rhs.data()[i]).epsilon(1e-12));
}

TEST_CASE("kron capacity error") {
    Matrix a(200, 200);
    Matrix b(200, 200);
    CHECK_THROWS_AS(kron(a, b, 4096), capacity_error);
}

TEST_CASE("svd_values rank-1 and diagonal cases") {
    Vector u{0.6, 0.0, 0.8};
    Vector v{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
    Vector sv = svd_values(outer(u, v));
    CHECK(sv[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(sv[1]) <= 1e-8);

    Matrix d(4, 2);
    d(0, 0) = -3.0;
    d(1, 1) = 2.0;
    Vector sd = svd_values(d);
    CHECK(sd[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sd[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("svd_values Frobenius identity") {
    Matrix a = random_matrix(8, 5, 85);
    Vector sv = svd_values(a);
    double sum_sq = 0.0;
    for (double s : sv) sum_sq += s * s;
    const double fro2 = frobenius_norm(a) * frobenius_norm(a);
    CHECK(std::abs(sum_sq - fro2) <= 1e-10 * std::max(1.0, fro2));
}

TEST_CASE("orthonormalize basic cases") {
    // already orthonormal: unchanged up to sign convention
    Matrix q(3, 2);
    q(0, 0) = 1.0;
    q(1, 1) = -1.0;
    Matrix r = orthonormalize(q);
    REQUIRE(r.cols() == 2);
    CHECK(r(0, 0) == doctest::Approx(1.0));
    CHECK(r(1, 1) == doctest::Approx(1.0)); // sign fixed

    // (e1, e1+e2) -> (e1, e2)
    Matrix v(3, 2);
    v(0, 0) = 1.0;
    v(0, 1) = 1.0;
    v(1, 1) = 1.0;
    Matrix w = orthonormalize(v);
    REQUIRE(w.cols() == 2);
    CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(w(0, 1)) <= 1e-14);

    // duplicate column dropped
    Matrix dup(3, 2);
    dup(0, 0) = 1.0;
    dup(0, 1) = 1.0;
    CHECK(orthonormalize(dup).cols() == 1);
}

TEST_CASE("orthonormalize random 100x8: orthonormal and span-preserving") {
    Matrix v = random_matrix(100, 8, 1008);
    Matrix q = orthonormalize(v);
    REQUIRE(q.cols() == 8);
    Matrix qtq = matmul_at_b(q, q);
    add_scaled(qtq, Matrix::identity(8), -1.0);
    CHECK(max_abs(qtq) <= 1e-10);

    Matrix pv = span_projector(v);
    Matrix pq = matmul_a_bt(q, q);
    add_scaled(pq, pv, -1.0);
    CHECK(max_abs(pq) <= 1e-8);
}

TEST_CASE("orthonormalize idempotence") {
    Matrix v = random_matrix(30, 5, 305);
    Matrix q1 = orthonormalize(v);
    Matrix q2 = orthonormalize(q1);
    REQUIRE(q1.cols() == q2.cols());
    for (std::size_t i = 0; i < q1.size(); ++i)
        CHECK(std::abs(q1.data()[i] - q2.data()[i]) <= 1e-12);
}

TEST_CASE("LinearOperator symmetry probe") {
    Matrix a = random_symmetric(20, 2020);
    LinearOperator op = dense_operator(a);
    SplitMix64 rng(555);
    for (int trial = 0; trial < 5; ++trial) {
        Vector x(20), y(20);
        for (double& t : x) t = rng.next_gaussian();
        for (double& t : y) t = rng.next_gaussian();
        const double lhs = dot(x, op(y));
        const double rhs = dot(y, op(x));
        CHECK(std::abs(lhs - rhs) <= 1e-8 * norm(x) * norm(y));
    }
}
