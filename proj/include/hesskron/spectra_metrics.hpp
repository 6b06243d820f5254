#ifndef HESSKRON_SPECTRA_METRICS_HPP
#define HESSKRON_SPECTRA_METRICS_HPP

#include "hesskron/hessian.hpp"
#include "hesskron/linalg.hpp"
#include "hesskron/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hesskron {

struct OverlapCurve {
    std::vector<std::size_t> dims;
    Vector overlaps;
};

struct CorrespondenceMatrix {
    enum class Kind { input, output };
    Kind kind = Kind::input;
    Matrix data; // n x t (input) or m x t (output), t retained Hessian eigenvectors
};

// Mean pairwise overlap across models plus spread and the random baseline.
struct CrossModelOverlap {
    std::vector<std::size_t> dims;
    Vector mean;
    Vector stddev;
    Vector baseline; // k / ambient dimension
};

// ||U^T V||_F^2 / k for two sets of k orthonormal columns.
double subspace_overlap(const Matrix& u, const Matrix& v);

// Row-major reshape of an (m*n)-vector to m x n, so matricize(u (x) v) = u v^T.
Matrix matricize(const Vector& h, std::size_t m, std::size_t n);

// Corr(v_i, h_j) = ||Mat(h_j) v_i||^2.
CorrespondenceMatrix correspondence_input(const Matrix& h_eigvecs, const Matrix& in_eigvecs,
                                          std::size_t m, std::size_t n);

// Corr(u_i, h_j) = ||Mat(h_j)^T u_i||^2.
CorrespondenceMatrix correspondence_output(const Matrix& h_eigvecs, const Matrix& out_eigvecs,
                                           std::size_t m, std::size_t n);

// ||Mat(h)|| / ||Mat(h)||_F, in (0, 1]; 1 exactly for rank-1 h.
double top_singular_ratio(const Vector& h, std::size_t m, std::size_t n);

struct AutocorrStats {
    double sq_dot = 0.0;      // (v1 . normalized E[x])^2
    double spec_ratio = 0.0;  // lambda1 / lambda2 of E[xx^T], +inf when lambda2 <= 0
    double mean_vs_cov = 0.0; // ||E[x] E[x]^T|| / ||Sigma_x||
};

// Rank-1 diagnostics of the input auto-correlation; expects factors computed
// without bias extension and the plain layer-input mean.
AutocorrStats autocorr_stats(const LayerFactors& factors, const Vector& x_mean);

// Mean pairwise top-k eigenspace overlap across models at layer p, for every
// k up to k_max. Eigenvectors come from Lanczos with a deflation margin of 10
// extra pairs; vectors with residual above 1e-4 * lambda1 are discarded and
// the curve truncates at the smallest converged count.
CrossModelOverlap cross_model_overlap(const std::vector<MlpModel>& models,
                                      const Dataset& data, std::size_t p,
                                      std::size_t k_max, bool include_bias = true,
                                      std::size_t lanczos_iters = 0,
                                      std::uint64_t seed = 0);

void write_overlap_csv(const std::string& path, const CrossModelOverlap& curve);
void write_correspondence_csv(const std::string& path, const CorrespondenceMatrix& corr);

} // namespace hesskron

#endif
