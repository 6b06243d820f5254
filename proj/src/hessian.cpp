#include "hesskron/hessian.hpp"

#include "hesskron/csv.hpp"
#include "hesskron/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <set>
#include <string>

namespace hesskron {

namespace {

void check_layer_index(const MlpModel& model, std::size_t p) {
    if (p < 1 || p > model.num_layers())
        throw precondition_error("layer index " + std::to_string(p) + " out of range [1, " +
                                 std::to_string(model.num_layers()) + "]");
}

Vector sample_row(const Dataset& data, std::size_t i) {
    return Vector(data.inputs.row(i), data.inputs.row(i) + data.dim());
}

// Per-sample artifacts shared by the Hessian paths: logit Jacobian at the
// layer, (extended) layer input, and the softmax output.
struct LayerContext {
    Matrix g;      // c x m
    Vector x_ext;  // n or n+1
    Vector probs;  // c
};

LayerContext make_layer_context(const MlpModel& model, const SampleCache& cache,
                                std::size_t p, bool include_bias) {
    LayerContext ctx;
    ctx.g = logit_jacobian(model, cache, p);
    const Vector& x = cache.layer_inputs[p - 1];
    ctx.x_ext = x;
    if (include_bias) ctx.x_ext.push_back(1.0);
    ctx.probs = cache.probs;
    return ctx;
}

// y = A t for A = diag(p) - p p^T, computed directly from the softmax output.
void apply_softmax_hessian(const Vector& probs, const Vector& t, Vector& y) {
    double pt = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) pt += probs[i] * t[i];
    y.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) y[i] = probs[i] * (t[i] - pt);
}

} // namespace

Vector mean_layer_input(const MlpModel& model, const Dataset& data, std::size_t p,
                        bool include_bias) {
    check_layer_index(model, p);
    const std::size_t n = model.layer_dims[p - 1];
    Vector mean(n + (include_bias ? 1 : 0), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        SampleCache cache = forward(model, sample_row(data, i), data.labels[i]);
        const Vector& x = cache.layer_inputs[p - 1];
        for (std::size_t j = 0; j < n; ++j) mean[j] += x[j];
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    for (std::size_t j = 0; j < n; ++j) mean[j] *= inv;
    if (include_bias) mean[n] = 1.0;
    return mean;
}

LayerFactors layer_factors(const MlpModel& model, const Dataset& data, std::size_t p,
                           bool include_bias) {
    check_layer_index(model, p);
    if (data.size() == 0) throw precondition_error("layer_factors: empty dataset");

    const std::size_t m = model.layer_dims[p];
    const std::size_t n = model.layer_dims[p - 1] + (include_bias ? 1 : 0);

    Matrix em(m, m);
    Matrix exx(n, n);
    for (std::size_t i = 0; i < data.size(); ++i) {
        SampleCache cache = forward(model, sample_row(data, i), data.labels[i]);
        LayerContext ctx = make_layer_context(model, cache, p, include_bias);
        // M_x = (Q G)^T (Q G), PSD by construction
        Matrix qg = matmul(q_factor(ctx.probs), ctx.g);
        for (std::size_t r = 0; r < qg.rows(); ++r) {
            const double* row = qg.row(r);
            for (std::size_t a = 0; a < m; ++a) {
                const double ra = row[a];
                if (ra == 0.0) continue;
                double* dst = em.row(a);
                for (std::size_t b = 0; b < m; ++b) dst[b] += ra * row[b];
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            const double xa = ctx.x_ext[a];
            if (xa == 0.0) continue;
            double* dst = exx.row(a);
            for (std::size_t b = 0; b < n; ++b) dst[b] += xa * ctx.x_ext[b];
        }
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    for (double& v : em.data()) v *= inv;
    for (double& v : exx.data()) v *= inv;

    LayerFactors out;
    out.layer = p;
    out.bias_extended = include_bias;
    out.output_hessian = std::move(em);
    out.input_autocorr = std::move(exx);
    out.out_eig = sym_eig_dense(out.output_hessian);
    out.in_eig = sym_eig_dense(out.input_autocorr);
    return out;
}

LinearOperator layerwise_hvp_operator(const MlpModel& model, const Dataset& data,
                                      std::size_t p, bool include_bias) {
    check_layer_index(model, p);
    const std::size_t m = model.layer_dims[p];
    const std::size_t n = model.layer_dims[p - 1] + (include_bias ? 1 : 0);

    auto contexts = std::make_shared<std::vector<LayerContext>>();
    contexts->reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        SampleCache cache = forward(model, sample_row(data, i), data.labels[i]);
        contexts->push_back(make_layer_context(model, cache, p, include_bias));
    }

    LinearOperator op;
    op.dim = m * n;
    op.apply = [contexts, m, n](const double* in, double* out) {
        std::fill(out, out + m * n, 0.0);
        Vector t1(m), t2, t3, t4(m);
        for (const LayerContext& ctx : *contexts) {
            // t1 = Mat(v) * xt
            for (std::size_t i = 0; i < m; ++i) {
                const double* vi = in + i * n;
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += vi[j] * ctx.x_ext[j];
                t1[i] = s;
            }
            t2 = matvec(ctx.g, t1);
            apply_softmax_hessian(ctx.probs, t2, t3);
            // t4 = G^T t3
            std::fill(t4.begin(), t4.end(), 0.0);
            for (std::size_t r = 0; r < ctx.g.rows(); ++r) {
                const double tr = t3[r];
                if (tr == 0.0) continue;
                const double* row = ctx.g.row(r);
                for (std::size_t i = 0; i < m; ++i) t4[i] += tr * row[i];
            }
            // out += vec(t4 xt^T)
            for (std::size_t i = 0; i < m; ++i) {
                const double ti = t4[i];
                if (ti == 0.0) continue;
                double* oi = out + i * n;
                for (std::size_t j = 0; j < n; ++j) oi[j] += ti * ctx.x_ext[j];
            }
        }
        const double inv = 1.0 / static_cast<double>(contexts->size());
        for (std::size_t i = 0; i < m * n; ++i) out[i] *= inv;
    };
    return op;
}

Matrix layerwise_dense(const MlpModel& model, const Dataset& data, std::size_t p,
                       bool include_bias, std::size_t dim_cap) {
    check_layer_index(model, p);
    const std::size_t m = model.layer_dims[p];
    const std::size_t n = model.layer_dims[p - 1] + (include_bias ? 1 : 0);
    const std::size_t dim = m * n;
    if (dim > dim_cap)
        throw capacity_error("layerwise_dense: dimension " + std::to_string(dim) +
                             " exceeds cap " + std::to_string(dim_cap) +
                             "; use layerwise_hvp_operator instead");

    Matrix h(dim, dim);
    for (std::size_t s = 0; s < data.size(); ++s) {
        SampleCache cache = forward(model, sample_row(data, s), data.labels[s]);
        LayerContext ctx = make_layer_context(model, cache, p, include_bias);
        Matrix qg = matmul(q_factor(ctx.probs), ctx.g);
        Matrix mx = matmul_at_b(qg, qg);
        // h += M_x (x) xt xt^T
        for (std::size_t i1 = 0; i1 < m; ++i1)
            for (std::size_t j1 = 0; j1 < m; ++j1) {
                const double mij = mx(i1, j1);
                if (mij == 0.0) continue;
                for (std::size_t i2 = 0; i2 < n; ++i2) {
                    const double w = mij * ctx.x_ext[i2];
                    if (w == 0.0) continue;
                    double* dst = h.row(i1 * n + i2) + j1 * n;
                    for (std::size_t j2 = 0; j2 < n; ++j2) dst[j2] += w * ctx.x_ext[j2];
                }
            }
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    for (double& v : h.data()) v *= inv;
    return h;
}

KronSpectrum kron_approx_spectrum(const LayerFactors& factors, std::size_t k) {
    const std::size_t m = factors.out_eig.values.size();
    const std::size_t n = factors.in_eig.values.size();
    if (k > m * n) throw precondition_error("kron_approx_spectrum: k exceeds m*n");

    struct Entry {
        double value;
        std::size_t i, j;
    };
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.value != b.value) return a.value < b.value; // max-heap on value
        return std::pair(a.i, a.j) > std::pair(b.i, b.j); // lexicographic ties
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    auto push = [&](std::size_t i, std::size_t j) {
        if (i >= m || j >= n || !seen.insert({i, j}).second) return;
        heap.push({factors.out_eig.values[i] * factors.in_eig.values[j], i, j});
    };
    push(0, 0);

    KronSpectrum out;
    out.vectors = Matrix(m * n, k);
    while (out.values.size() < k) {
        const Entry top = heap.top();
        heap.pop();
        const std::size_t r = out.values.size();
        out.values.push_back(top.value);
        out.factors.emplace_back(top.i, top.j);
        // eigenvector u_i (x) v_j = vec(u_i v_j^T)
        for (std::size_t a = 0; a < m; ++a) {
            const double ua = factors.out_eig.vectors(a, top.i);
            for (std::size_t b = 0; b < n; ++b)
                out.vectors(a * n + b, r) = ua * factors.in_eig.vectors(b, top.j);
        }
        push(top.i + 1, top.j);
        push(top.i, top.j + 1);
    }
    fix_sign_columns(out.vectors);
    return out;
}

Matrix full_output_hessian(const MlpModel& model, const Dataset& data,
                           std::size_t dim_cap) {
    std::size_t m_hat = 0;
    for (std::size_t p = 1; p <= model.num_layers(); ++p) m_hat += model.layer_dims[p];
    if (m_hat > dim_cap)
        throw capacity_error("full_output_hessian: stacked output dimension " +
                             std::to_string(m_hat) + " exceeds cap " +
                             std::to_string(dim_cap));

    const std::size_t c = model.num_classes();
    Matrix em(m_hat, m_hat);
    Matrix g_stack(c, m_hat);
    for (std::size_t s = 0; s < data.size(); ++s) {
        SampleCache cache = forward(model, sample_row(data, s), data.labels[s]);
        std::size_t off = 0;
        for (std::size_t p = 1; p <= model.num_layers(); ++p) {
            Matrix g = logit_jacobian(model, cache, p);
            for (std::size_t r = 0; r < c; ++r)
                for (std::size_t j = 0; j < g.cols(); ++j) g_stack(r, off + j) = g(r, j);
            off += g.cols();
        }
        Matrix qg = matmul(q_factor(cache.probs), g_stack);
        for (std::size_t r = 0; r < qg.rows(); ++r) {
            const double* row = qg.row(r);
            for (std::size_t a = 0; a < m_hat; ++a) {
                const double ra = row[a];
                if (ra == 0.0) continue;
                double* dst = em.row(a);
                for (std::size_t b = 0; b < m_hat; ++b) dst[b] += ra * row[b];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    for (double& v : em.data()) v *= inv;
    return em;
}

EigPairs full_hessian_approx(const MlpModel& model, const Dataset& data, std::size_t k,
                             std::size_t dim_cap) {
    Matrix em = full_output_hessian(model, data, dim_cap);
    if (k > em.rows()) throw precondition_error("full_hessian_approx: k exceeds spectrum");
    EigPairs out_eig = sym_eig_dense(em);

    std::vector<Vector> means;
    for (std::size_t p = 1; p <= model.num_layers(); ++p)
        means.push_back(mean_layer_input(model, data, p, /*include_bias=*/true));

    const std::size_t total = model.param_count();
    std::vector<std::pair<double, Vector>> candidates; // (lambda estimate, w_i)
    for (std::size_t i = 0; i < k; ++i) {
        Vector w;
        w.reserve(total);
        std::size_t off = 0;
        for (std::size_t p = 1; p <= model.num_layers(); ++p) {
            const std::size_t mp = model.layer_dims[p];
            for (std::size_t a = 0; a < mp; ++a) {
                const double ua = out_eig.vectors(off + a, i);
                for (double xm : means[p - 1]) w.push_back(ua * xm);
            }
            off += mp;
        }
        const double nw2 = dot(w, w);
        candidates.emplace_back(out_eig.values[i] * nw2, std::move(w));
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    Matrix stacked(total, candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        stacked.set_col(i, candidates[i].second);
    Matrix basis = orthonormalize(stacked);

    EigPairs result;
    result.vectors = basis;
    for (std::size_t i = 0; i < basis.cols(); ++i) result.values.push_back(candidates[i].first);
    return result;
}

LinearOperator full_gterm_operator(const MlpModel& model, const Dataset& data) {
    const std::size_t num_layers = model.num_layers();

    struct FullContext {
        std::vector<Matrix> gs;     // per layer, c x m(p)
        std::vector<Vector> x_exts; // per layer, n(p)+1
        Vector probs;
    };
    auto contexts = std::make_shared<std::vector<FullContext>>();
    contexts->reserve(data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        SampleCache cache = forward(model, sample_row(data, s), data.labels[s]);
        FullContext ctx;
        for (std::size_t p = 1; p <= num_layers; ++p) {
            ctx.gs.push_back(logit_jacobian(model, cache, p));
            Vector x = cache.layer_inputs[p - 1];
            x.push_back(1.0);
            ctx.x_exts.push_back(std::move(x));
        }
        ctx.probs = cache.probs;
        contexts->push_back(std::move(ctx));
    }

    // layer segment offsets in the canonical flat layout
    auto dims = std::make_shared<std::vector<std::size_t>>(model.layer_dims);
    const std::size_t total = model.param_count();
    const std::size_t c = model.num_classes();

    LinearOperator op;
    op.dim = total;
    op.apply = [contexts, dims, total, c, num_layers](const double* in, double* out) {
        std::fill(out, out + total, 0.0);
        Vector fv(c), afv, t1;
        for (const FullContext& ctx : *contexts) {
            // F v = sum_p G(p) (Mat_p(v) xt(p))
            std::fill(fv.begin(), fv.end(), 0.0);
            std::size_t off = 0;
            for (std::size_t p = 0; p < num_layers; ++p) {
                const std::size_t n = (*dims)[p];
                const std::size_t m = (*dims)[p + 1];
                const Vector& x = ctx.x_exts[p];
                t1.assign(m, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    const double* wi = in + off + i * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += wi[j] * x[j];
                    s += in[off + m * n + i]; // bias slot, times xt's trailing 1
                    t1[i] = s;
                }
                const Matrix& g = ctx.gs[p];
                for (std::size_t r = 0; r < c; ++r) {
                    const double* row = g.row(r);
                    double s = 0.0;
                    for (std::size_t i = 0; i < m; ++i) s += row[i] * t1[i];
                    fv[r] += s;
                }
                off += m * n + m;
            }
            apply_softmax_hessian(ctx.probs, fv, afv);
            // out += F^T (A F v), layer by layer
            off = 0;
            for (std::size_t p = 0; p < num_layers; ++p) {
                const std::size_t n = (*dims)[p];
                const std::size_t m = (*dims)[p + 1];
                const Vector& x = ctx.x_exts[p];
                const Matrix& g = ctx.gs[p];
                t1.assign(m, 0.0);
                for (std::size_t r = 0; r < c; ++r) {
                    const double ar = afv[r];
                    if (ar == 0.0) continue;
                    const double* row = g.row(r);
                    for (std::size_t i = 0; i < m; ++i) t1[i] += ar * row[i];
                }
                for (std::size_t i = 0; i < m; ++i) {
                    const double ti = t1[i];
                    if (ti == 0.0) continue;
                    double* oi = out + off + i * n;
                    for (std::size_t j = 0; j < n; ++j) oi[j] += ti * x[j];
                    out[off + m * n + i] += ti;
                }
                off += m * n + m;
            }
        }
        const double inv = 1.0 / static_cast<double>(contexts->size());
        for (std::size_t i = 0; i < total; ++i) out[i] *= inv;
    };
    return op;
}

Matrix s_matrix(const MlpModel& model, std::size_t k) {
    const std::size_t num_layers = model.num_layers();
    if (k < 1 || k >= num_layers)
        throw precondition_error("s_matrix: need 1 <= k < L");
    Matrix s = model.weights[num_layers - 1]; // W(L)
    for (std::size_t q = num_layers - 1; q > k; --q) s = matmul(s, model.weights[q - 1]);
    return s;
}

Matrix closed_form_output_hessian(const MlpModel& model, std::size_t k,
                                  const Matrix& a_tilde) {
    const std::size_t c = model.num_classes();
    if (a_tilde.rows() != c || a_tilde.cols() != c)
        throw precondition_error("closed_form_output_hessian: A~ must be c x c");
    Matrix s = s_matrix(model, k);
    Matrix result = matmul_at_b(s, matmul(a_tilde, s));
    const double factor = std::pow(0.25, static_cast<double>(model.num_layers() - k));
    for (double& v : result.data()) v *= factor;
    return result;
}

void write_spectrum_csv(const std::string& path, const Vector& values) {
    CsvWriter csv(path, {"index", "value"});
    for (std::size_t i = 0; i < values.size(); ++i) csv.row(i, values[i]);
}

} // namespace hesskron
