#include "hesskron/network.hpp"

#include "hesskron/errors.hpp"
#include "hesskron/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace hesskron {

std::size_t MlpModel::param_count() const {
    std::size_t p = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        p += weights[i].size() + biases[i].size();
    return p;
}

void MlpModel::validate() const {
    if (layer_dims.size() < 2) throw precondition_error("MlpModel: need at least 2 layers");
    if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
        throw precondition_error("MlpModel: layer count mismatch");
    for (std::size_t p = 0; p < weights.size(); ++p) {
        if (weights[p].rows() != layer_dims[p + 1] || weights[p].cols() != layer_dims[p])
            throw precondition_error("MlpModel: weight shape mismatch at layer " +
                                     std::to_string(p + 1));
        if (biases[p].size() != layer_dims[p + 1])
            throw precondition_error("MlpModel: bias shape mismatch at layer " +
                                     std::to_string(p + 1));
        if (!weights[p].all_finite())
            throw precondition_error("MlpModel: non-finite weights at layer " +
                                     std::to_string(p + 1));
    }
}

MlpModel init_xavier(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw precondition_error("init_xavier: need at least 2 layers");
    MlpModel m;
    m.layer_dims = layer_dims;
    SplitMix64 rng(seed);
    for (std::size_t p = 0; p + 1 < layer_dims.size(); ++p) {
        const std::size_t fan_in = layer_dims[p];
        const std::size_t fan_out = layer_dims[p + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& x : w.data()) x = rng.next_uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

MlpModel init_gaussian_rowscaled(const std::vector<std::size_t>& layer_dims,
                                 std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw precondition_error("init_gaussian_rowscaled: need at least 2 layers");
    MlpModel m;
    m.layer_dims = layer_dims;
    SplitMix64 rng(seed);
    for (std::size_t p = 0; p + 1 < layer_dims.size(); ++p) {
        const std::size_t fan_in = layer_dims[p];
        const std::size_t fan_out = layer_dims[p + 1];
        const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& x : w.data()) x = sd * rng.next_gaussian();
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

SampleCache forward(const MlpModel& model, const Vector& x, std::size_t label) {
    if (x.size() != model.input_dim())
        throw precondition_error("forward: input dimension mismatch");
    const std::size_t num_layers = model.num_layers();
    SampleCache cache;
    cache.label = label;
    cache.layer_inputs.reserve(num_layers);
    cache.pre_activations.reserve(num_layers);
    cache.layer_inputs.push_back(x);
    for (std::size_t p = 0; p < num_layers; ++p) {
        Vector z = matvec(model.weights[p], cache.layer_inputs[p]);
        axpy(1.0, model.biases[p], z);
        cache.pre_activations.push_back(z);
        if (p + 1 < num_layers) {
            Vector mask(z.size());
            Vector act(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) {
                mask[i] = (z[i] > 0.0) ? 1.0 : 0.0;
                act[i] = (z[i] > 0.0) ? z[i] : 0.0;
            }
            cache.relu_masks.push_back(std::move(mask));
            cache.layer_inputs.push_back(std::move(act));
        }
    }
    // max-subtracted softmax
    const Vector& logits = cache.pre_activations.back();
    const double zmax = *std::max_element(logits.begin(), logits.end());
    cache.probs.resize(logits.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        cache.probs[i] = std::exp(logits[i] - zmax);
        denom += cache.probs[i];
    }
    for (double& p : cache.probs) p /= denom;
    return cache;
}

double loss(const SampleCache& cache) {
    return -std::log(cache.probs[cache.label]);
}

ParamGrads grad(const MlpModel& model, const SampleCache& cache) {
    const std::size_t num_layers = model.num_layers();
    ParamGrads g;
    g.dw.resize(num_layers);
    g.db.resize(num_layers);

    // delta at the logits: p - y
    Vector delta = cache.probs;
    delta[cache.label] -= 1.0;

    for (std::size_t p = num_layers; p-- > 0;) {
        g.dw[p] = outer(delta, cache.layer_inputs[p]);
        g.db[p] = delta;
        if (p > 0) {
            Vector back = matvec_t(model.weights[p], delta);
            const Vector& mask = cache.relu_masks[p - 1];
            for (std::size_t i = 0; i < back.size(); ++i) back[i] *= mask[i];
            delta = std::move(back);
        }
    }
    return g;
}

TrainResult train_sgd(const MlpModel& model, const Dataset& data, const TrainOptions& opt) {
    if (opt.lr < 0.0) throw precondition_error("train_sgd: lr must be >= 0");
    if (opt.batch < 1) throw precondition_error("train_sgd: batch must be >= 1");
    data.validate();
    if (data.dim() != model.input_dim() || data.num_classes != model.num_classes())
        throw precondition_error("train_sgd: dataset does not match model shape");

    TrainResult result;
    result.model = model;
    MlpModel& m = result.model;

    std::vector<Matrix> vel_w;
    std::vector<Vector> vel_b;
    if (opt.momentum != 0.0) {
        for (std::size_t p = 0; p < m.num_layers(); ++p) {
            vel_w.emplace_back(m.weights[p].rows(), m.weights[p].cols());
            vel_b.emplace_back(m.biases[p].size(), 0.0);
        }
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<Matrix> acc_w;
    std::vector<Vector> acc_b;
    for (std::size_t p = 0; p < m.num_layers(); ++p) {
        acc_w.emplace_back(m.weights[p].rows(), m.weights[p].cols());
        acc_b.emplace_back(m.biases[p].size(), 0.0);
    }

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        SplitMix64 rng(SplitMix64::derive(opt.seed, epoch));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += opt.batch) {
            const std::size_t end = std::min(start + opt.batch, order.size());
            const double inv = 1.0 / static_cast<double>(end - start);

            for (std::size_t p = 0; p < m.num_layers(); ++p) {
                std::fill(acc_w[p].data().begin(), acc_w[p].data().end(), 0.0);
                std::fill(acc_b[p].begin(), acc_b[p].end(), 0.0);
            }
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t s = order[i];
                Vector x(data.inputs.row(s), data.inputs.row(s) + data.dim());
                SampleCache cache = forward(m, x, data.labels[s]);
                const double l = loss(cache);
                if (!std::isfinite(l))
                    throw training_error("train_sgd: loss diverged at epoch " +
                                         std::to_string(epoch));
                ParamGrads g = grad(m, cache);
                for (std::size_t p = 0; p < m.num_layers(); ++p) {
                    add_scaled(acc_w[p], g.dw[p], inv);
                    axpy(inv, g.db[p], acc_b[p]);
                }
            }
            for (std::size_t p = 0; p < m.num_layers(); ++p) {
                if (opt.weight_decay != 0.0)
                    add_scaled(acc_w[p], m.weights[p], opt.weight_decay);
                if (opt.momentum != 0.0) {
                    for (std::size_t i = 0; i < vel_w[p].size(); ++i)
                        vel_w[p].data()[i] =
                            opt.momentum * vel_w[p].data()[i] + acc_w[p].data()[i];
                    for (std::size_t i = 0; i < vel_b[p].size(); ++i)
                        vel_b[p][i] = opt.momentum * vel_b[p][i] + acc_b[p][i];
                    add_scaled(m.weights[p], vel_w[p], -opt.lr);
                    axpy(-opt.lr, vel_b[p], m.biases[p]);
                } else {
                    add_scaled(m.weights[p], acc_w[p], -opt.lr);
                    axpy(-opt.lr, acc_b[p], m.biases[p]);
                }
            }
        }
        const std::size_t done = epoch + 1;
        if (std::find(opt.snapshot_epochs.begin(), opt.snapshot_epochs.end(), done) !=
            opt.snapshot_epochs.end())
            result.snapshots.emplace_back(done, m);
    }
    return result;
}

Matrix softmax_hessian(const Vector& probs) {
    const std::size_t c = probs.size();
    Matrix a(c, c);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) a(i, j) = -probs[i] * probs[j];
        a(i, i) += probs[i];
    }
    return a;
}

Matrix q_factor(const Vector& probs) {
    const std::size_t c = probs.size();
    Matrix q(c, c);
    for (std::size_t i = 0; i < c; ++i) {
        const double s = std::sqrt(probs[i]);
        for (std::size_t j = 0; j < c; ++j) q(i, j) = -s * probs[j];
        q(i, i) += s;
    }
    return q;
}

Matrix logit_jacobian(const MlpModel& model, const SampleCache& cache, std::size_t p) {
    const std::size_t num_layers = model.num_layers();
    if (p < 1 || p > num_layers) throw precondition_error("logit_jacobian: layer out of range");
    Matrix g = Matrix::identity(model.num_classes());
    // G(p) = W(L) D(L-1) W(L-1) ... D(p), built by descending recursion
    // G(q) = G(q+1) W(q+1) D(q).
    for (std::size_t q = num_layers; q-- > p;) {
        g = matmul(g, model.weights[q]); // weights[q] is W(q+1) in 1-based naming
        const Vector& mask = cache.relu_masks[q - 1];
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double* row = g.row(i);
            for (std::size_t j = 0; j < g.cols(); ++j) row[j] *= mask[j];
        }
    }
    return g;
}

double mean_loss(const MlpModel& model, const Dataset& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector x(data.inputs.row(i), data.inputs.row(i) + data.dim());
        total += loss(forward(model, x, data.labels[i]));
    }
    return total / static_cast<double>(data.size());
}

double classification_error(const MlpModel& model, const Dataset& data) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector x(data.inputs.row(i), data.inputs.row(i) + data.dim());
        SampleCache cache = forward(model, x, data.labels[i]);
        const std::size_t pred = static_cast<std::size_t>(
            std::distance(cache.probs.begin(),
                          std::max_element(cache.probs.begin(), cache.probs.end())));
        if (pred != data.labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Flat layout and checkpoints
// ---------------------------------------------------------------------------

Vector pack_parameters(const MlpModel& model) {
    Vector flat;
    flat.reserve(model.param_count());
    for (std::size_t p = 0; p < model.num_layers(); ++p) {
        const auto& w = model.weights[p].data();
        flat.insert(flat.end(), w.begin(), w.end());
        flat.insert(flat.end(), model.biases[p].begin(), model.biases[p].end());
    }
    return flat;
}

void unpack_parameters(const Vector& flat, MlpModel& model) {
    if (flat.size() != model.param_count())
        throw precondition_error("unpack_parameters: length mismatch");
    std::size_t off = 0;
    for (std::size_t p = 0; p < model.num_layers(); ++p) {
        auto& w = model.weights[p].data();
        std::copy(flat.begin() + off, flat.begin() + off + w.size(), w.begin());
        off += w.size();
        std::copy(flat.begin() + off, flat.begin() + off + model.biases[p].size(),
                  model.biases[p].begin());
        off += model.biases[p].size();
    }
}

namespace {

void write_framed(const std::string& path, const nlohmann::json& header,
                  const double* block, std::size_t count) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write " + path);
    const std::string head = header.dump();
    f.write(head.data(), static_cast<std::streamsize>(head.size()));
    f.put('\n');
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    f.write(reinterpret_cast<const char*>(block),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw io_error("write failed for " + path);
}

nlohmann::json read_framed(const std::string& path, std::vector<double>& block) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read " + path);
    std::string head;
    if (!std::getline(f, head)) throw format_error("missing header in " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw format_error("bad checkpoint header in " + path + ": " + e.what());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
    if (raw.size() % sizeof(double) != 0)
        throw format_error("parameter block size not a multiple of 8 in " + path);
    block.resize(raw.size() / sizeof(double));
    std::memcpy(block.data(), raw.data(), raw.size());
    return j;
}

} // namespace

void save_checkpoint(const MlpModel& model, const std::string& path,
                     std::uint64_t seed, std::size_t epoch) {
    nlohmann::json header{{"layer_dims", model.layer_dims},
                          {"seed", seed},
                          {"epoch", epoch}};
    const Vector flat = pack_parameters(model);
    write_framed(path, header, flat.data(), flat.size());
}

MlpModel load_checkpoint(const std::string& path) {
    std::vector<double> block;
    const nlohmann::json header = read_framed(path, block);
    if (!header.contains("layer_dims"))
        throw format_error("checkpoint header missing layer_dims in " + path);
    MlpModel m;
    m.layer_dims = header["layer_dims"].get<std::vector<std::size_t>>();
    if (m.layer_dims.size() < 2) throw format_error("bad layer_dims in " + path);
    for (std::size_t p = 0; p + 1 < m.layer_dims.size(); ++p) {
        m.weights.emplace_back(m.layer_dims[p + 1], m.layer_dims[p]);
        m.biases.emplace_back(m.layer_dims[p + 1], 0.0);
    }
    if (block.size() != m.param_count())
        throw format_error("parameter block length mismatch in " + path);
    unpack_parameters(block, m);
    m.validate();
    return m;
}

void save_matrix(const Matrix& m, const std::string& path) {
    nlohmann::json header{{"rows", m.rows()}, {"cols", m.cols()}};
    write_framed(path, header, m.data().data(), m.size());
}

Matrix load_matrix(const std::string& path) {
    std::vector<double> block;
    const nlohmann::json header = read_framed(path, block);
    const std::size_t rows = header.at("rows").get<std::size_t>();
    const std::size_t cols = header.at("cols").get<std::size_t>();
    if (block.size() != rows * cols)
        throw format_error("matrix block length mismatch in " + path);
    return Matrix(rows, cols, std::move(block));
}

} // namespace hesskron
