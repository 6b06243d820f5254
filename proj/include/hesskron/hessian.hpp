#ifndef HESSKRON_HESSIAN_HPP
#define HESSKRON_HESSIAN_HPP

#include "hesskron/datasets.hpp"
#include "hesskron/linalg.hpp"
#include "hesskron/network.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace hesskron {

// Kronecker factors of one layer's Hessian: the output Hessian E[M] and the
// input auto-correlation E[x x^T] (bias-extended to E[xt xt^T] with
// xt = (x; 1) when include_bias is set), with their eigendecompositions.
struct LayerFactors {
    std::size_t layer = 0;      // 1-based
    bool bias_extended = false;
    Matrix output_hessian;      // m x m
    Matrix input_autocorr;      // n x n, or (n+1) x (n+1) when bias-extended
    EigPairs out_eig;
    EigPairs in_eig;
};

// Top-k spectrum of E[M] (x) E[xx^T]: products of factor eigenvalues with
// their (out index, in index) provenance and the eigenvectors u_i (x) v_j.
struct KronSpectrum {
    Vector values;                                        // descending
    std::vector<std::pair<std::size_t, std::size_t>> factors;
    Matrix vectors;                                       // (m*n) x k columns
};

// Empirical mean over the dataset of M_x = G^T A G and of xt xt^T for layer p.
LayerFactors layer_factors(const MlpModel& model, const Dataset& data, std::size_t p,
                           bool include_bias = true);

// Exact layer-wise Hessian action v -> mean_x vec(G^T A G Mat(v) xt xt^T)
// without materializing the matrix. Forward caches are computed once at
// construction; the returned operator is immutable.
LinearOperator layerwise_hvp_operator(const MlpModel& model, const Dataset& data,
                                      std::size_t p, bool include_bias = true);

// Dense layer-wise Hessian, mean of M_x (x) xt xt^T. Dimension capped.
Matrix layerwise_dense(const MlpModel& model, const Dataset& data, std::size_t p,
                       bool include_bias = true, std::size_t dim_cap = 4096);

// Top-k eigenpairs of the Kronecker approximation, merged from the factor
// spectra by a descending k-way selection; ties broken (i, j) lexicographic.
KronSpectrum kron_approx_spectrum(const LayerFactors& factors, std::size_t k);

// Full output Hessian E[M] on the concatenated per-layer outputs
// (dimension sum_p m(p), capped), built from stacked logit Jacobians.
Matrix full_output_hessian(const MlpModel& model, const Dataset& data,
                           std::size_t dim_cap = 2000);

// Approximate top-k eigenpairs of the full-parameter G-term Hessian: segments
// u_i(p) (x) E[xt(p)] assembled per layer, eigenvalue estimates
// sigma_i * ||w_i||^2 taken before normalization, basis orthonormalized.
EigPairs full_hessian_approx(const MlpModel& model, const Dataset& data, std::size_t k,
                             std::size_t dim_cap = 2000);

// Exact full-parameter G-term Hessian as an implicit operator over the
// canonical flat parameter layout.
LinearOperator full_gterm_operator(const MlpModel& model, const Dataset& data);

// S(k) = W(L) W(L-1) ... W(k+1); S(L-1) = W(L).
Matrix s_matrix(const MlpModel& model, std::size_t k);

// Closed-form output Hessian approximation 4^-(L-k) S(k)^T A S(k).
Matrix closed_form_output_hessian(const MlpModel& model, std::size_t k,
                                  const Matrix& a_tilde);

// Mean layer input E[xt(p)] (bias-extended when include_bias).
Vector mean_layer_input(const MlpModel& model, const Dataset& data, std::size_t p,
                        bool include_bias);

// CSV export of a spectrum: one row per eigenvalue (index, value).
void write_spectrum_csv(const std::string& path, const Vector& values);

} // namespace hesskron

#endif
