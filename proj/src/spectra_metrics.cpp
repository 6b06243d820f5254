#include "hesskron/spectra_metrics.hpp"

#include "hesskron/csv.hpp"
#include "hesskron/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hesskron {

namespace {

void require_orthonormal(const Matrix& u, const char* who) {
    Matrix utu = matmul_at_b(u, u);
    add_scaled(utu, Matrix::identity(u.cols()), -1.0);
    if (max_abs(utu) > 1e-6)
        throw precondition_error(std::string(who) + ": columns are not orthonormal");
}

} // namespace

double subspace_overlap(const Matrix& u, const Matrix& v) {
    if (u.rows() != v.rows())
        throw precondition_error("subspace_overlap: ambient dimension mismatch");
    if (u.cols() != v.cols() || u.cols() == 0)
        throw precondition_error("subspace_overlap: need equal nonzero k");
    require_orthonormal(u, "subspace_overlap");
    require_orthonormal(v, "subspace_overlap");
    Matrix utv = matmul_at_b(u, v);
    const double f = frobenius_norm(utv);
    return f * f / static_cast<double>(u.cols());
}

Matrix matricize(const Vector& h, std::size_t m, std::size_t n) {
    if (h.size() != m * n)
        throw precondition_error("matricize: length " + std::to_string(h.size()) +
                                 " != " + std::to_string(m) + "*" + std::to_string(n));
    return Matrix(m, n, h);
}

CorrespondenceMatrix correspondence_input(const Matrix& h_eigvecs, const Matrix& in_eigvecs,
                                          std::size_t m, std::size_t n) {
    const std::size_t t = h_eigvecs.cols();
    CorrespondenceMatrix out;
    out.kind = CorrespondenceMatrix::Kind::input;
    out.data = Matrix(in_eigvecs.cols(), t);
    for (std::size_t j = 0; j < t; ++j) {
        Matrix mat = matricize(h_eigvecs.col(j), m, n);
        for (std::size_t i = 0; i < in_eigvecs.cols(); ++i) {
            Vector mv = matvec(mat, in_eigvecs.col(i));
            out.data(i, j) = dot(mv, mv);
        }
    }
    return out;
}

CorrespondenceMatrix correspondence_output(const Matrix& h_eigvecs, const Matrix& out_eigvecs,
                                           std::size_t m, std::size_t n) {
    const std::size_t t = h_eigvecs.cols();
    CorrespondenceMatrix out;
    out.kind = CorrespondenceMatrix::Kind::output;
    out.data = Matrix(out_eigvecs.cols(), t);
    for (std::size_t j = 0; j < t; ++j) {
        Matrix mat = matricize(h_eigvecs.col(j), m, n);
        for (std::size_t i = 0; i < out_eigvecs.cols(); ++i) {
            Vector mv = matvec_t(mat, out_eigvecs.col(i));
            out.data(i, j) = dot(mv, mv);
        }
    }
    return out;
}

double top_singular_ratio(const Vector& h, std::size_t m, std::size_t n) {
    const double nh = norm(h);
    if (nh == 0.0) throw precondition_error("top_singular_ratio: zero vector");
    Matrix mat = matricize(h, m, n);
    Vector sv = svd_values(mat);
    return sv[0] / frobenius_norm(mat);
}

AutocorrStats autocorr_stats(const LayerFactors& factors, const Vector& x_mean) {
    if (factors.bias_extended)
        throw precondition_error("autocorr_stats: factors must use plain xx^T");
    if (x_mean.size() != factors.input_autocorr.rows())
        throw precondition_error("autocorr_stats: mean dimension mismatch");
    const double mean_norm = norm(x_mean);
    if (mean_norm == 0.0) throw precondition_error("autocorr_stats: zero mean");

    AutocorrStats stats;
    Vector v1 = factors.in_eig.vectors.col(0);
    const double d = dot(v1, x_mean) / mean_norm;
    stats.sq_dot = d * d;

    const double l1 = factors.in_eig.values[0];
    const double l2 = factors.in_eig.values.size() > 1 ? factors.in_eig.values[1] : 0.0;
    stats.spec_ratio =
        (l2 > 0.0) ? l1 / l2 : std::numeric_limits<double>::infinity();

    // ||E[x] E[x]^T|| = ||E[x]||^2; Sigma = E[xx^T] - E[x]E[x]^T
    Matrix sigma = factors.input_autocorr;
    add_scaled(sigma, outer(x_mean, x_mean), -1.0);
    const double sigma_norm = spectral_norm_sym(sigma);
    stats.mean_vs_cov = (sigma_norm > 0.0)
                            ? (mean_norm * mean_norm) / sigma_norm
                            : std::numeric_limits<double>::infinity();
    return stats;
}

CrossModelOverlap cross_model_overlap(const std::vector<MlpModel>& models,
                                      const Dataset& data, std::size_t p,
                                      std::size_t k_max, bool include_bias,
                                      std::size_t lanczos_iters, std::uint64_t seed) {
    if (models.size() < 2)
        throw precondition_error("cross_model_overlap: need at least 2 models");
    for (const MlpModel& m : models)
        if (m.layer_dims != models.front().layer_dims)
            throw precondition_error("cross_model_overlap: mismatched architectures");

    const std::size_t m_dim = models.front().layer_dims[p];
    const std::size_t n_dim =
        models.front().layer_dims[p - 1] + (include_bias ? 1 : 0);
    const std::size_t ambient = m_dim * n_dim;
    const std::size_t want = std::min(k_max + 10, ambient); // deflation margin
    if (lanczos_iters == 0) lanczos_iters = std::min(ambient, 2 * want + 30);

    // top eigenvectors per model, residual-gated
    std::vector<Matrix> tops;
    std::size_t converged_min = want;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        LinearOperator op = layerwise_hvp_operator(models[mi], data, p, include_bias);
        EigPairs e = lanczos_topk(op, want, lanczos_iters, seed + mi);
        const double lambda1 = std::abs(e.values[0]);
        std::size_t good = 0;
        for (std::size_t i = 0; i < want; ++i) {
            Vector v = e.vectors.col(i);
            Vector hv = op(v);
            axpy(-e.values[i], v, hv);
            if (norm(hv) <= 1e-4 * lambda1)
                ++good;
            else
                break; // under-converged tail truncates the curve
        }
        converged_min = std::min(converged_min, good);
        tops.push_back(e.vectors);
    }
    const std::size_t usable = std::min(converged_min, k_max);
    if (usable == 0) throw solver_error("cross_model_overlap: no converged eigenvectors");

    CrossModelOverlap out;
    for (std::size_t k = 1; k <= usable; ++k) {
        Vector pair_overlaps;
        for (std::size_t a = 0; a < models.size(); ++a)
            for (std::size_t b = a + 1; b < models.size(); ++b) {
                Matrix ua(tops[a].rows(), k), ub(tops[b].rows(), k);
                for (std::size_t col = 0; col < k; ++col) {
                    ua.set_col(col, tops[a].col(col));
                    ub.set_col(col, tops[b].col(col));
                }
                pair_overlaps.push_back(subspace_overlap(ua, ub));
            }
        double mean = 0.0;
        for (double v : pair_overlaps) mean += v;
        mean /= static_cast<double>(pair_overlaps.size());
        double var = 0.0;
        for (double v : pair_overlaps) var += (v - mean) * (v - mean);
        const double sd = pair_overlaps.size() > 1
                              ? std::sqrt(var / static_cast<double>(pair_overlaps.size() - 1))
                              : 0.0;
        out.dims.push_back(k);
        out.mean.push_back(mean);
        out.stddev.push_back(sd);
        out.baseline.push_back(static_cast<double>(k) / static_cast<double>(ambient));
    }
    return out;
}

void write_overlap_csv(const std::string& path, const CrossModelOverlap& curve) {
    CsvWriter csv(path, {"k", "mean", "std", "baseline"});
    for (std::size_t i = 0; i < curve.dims.size(); ++i)
        csv.row(curve.dims[i], curve.mean[i], curve.stddev[i], curve.baseline[i]);
}

void write_correspondence_csv(const std::string& path, const CorrespondenceMatrix& corr) {
    CsvWriter csv(path, {"i", "j", "value"});
    for (std::size_t i = 0; i < corr.data.rows(); ++i)
        for (std::size_t j = 0; j < corr.data.cols(); ++j) csv.row(i, j, corr.data(i, j));
}

} // namespace hesskron
