#ifndef HESSKRON_NETWORK_HPP
#define HESSKRON_NETWORK_HPP

#include "hesskron/datasets.hpp"
#include "hesskron/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hesskron {

// Fully-connected ReLU classifier. Layers are 1-based in the public API to
// match the layer index p in {1..L}: weights[p-1] maps activations of width
// layer_dims[p-1] to layer_dims[p].
struct MlpModel {
    std::vector<std::size_t> layer_dims; // input dim, hidden widths..., class count
    std::vector<Matrix> weights;         // W(p): layer_dims[p] x layer_dims[p-1]
    std::vector<Vector> biases;          // b(p): layer_dims[p]

    std::size_t num_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t num_classes() const { return layer_dims.back(); }
    std::size_t param_count() const;

    void validate() const;
};

// Per-input forward artifacts: everything the Hessian machinery needs.
struct SampleCache {
    std::vector<Vector> layer_inputs;    // x(p), p = 1..L; layer_inputs[0] = x
    std::vector<Vector> pre_activations; // z(p), p = 1..L
    std::vector<Vector> relu_masks;      // 0/1 masks of z(p), p = 1..L-1
    Vector probs;                        // softmax(z(L))
    std::size_t label = 0;
};

// Per-layer parameter gradient, same shapes as the model.
struct ParamGrads {
    std::vector<Matrix> dw;
    std::vector<Vector> db;
};

MlpModel init_xavier(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

// W(p) entries i.i.d. N(0, 1/fan_in), zero biases.
MlpModel init_gaussian_rowscaled(const std::vector<std::size_t>& layer_dims,
                                 std::uint64_t seed);

SampleCache forward(const MlpModel& model, const Vector& x, std::size_t label);

double loss(const SampleCache& cache);

ParamGrads grad(const MlpModel& model, const SampleCache& cache);

struct TrainOptions {
    double lr = 0.01;
    std::size_t batch = 128;
    std::size_t epochs = 1;
    double momentum = 0.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> snapshot_epochs; // models captured after these epochs
};

struct TrainResult {
    MlpModel model;
    std::vector<std::pair<std::size_t, MlpModel>> snapshots;
};

TrainResult train_sgd(const MlpModel& model, const Dataset& data, const TrainOptions& opt);

// A = diag(p) - p p^T, the Hessian of cross-entropy w.r.t. the logits.
Matrix softmax_hessian(const Vector& probs);

// Q = diag(sqrt(p)) (I - 1 p^T); satisfies Q^T Q = A.
Matrix q_factor(const Vector& probs);

// G(p) = dz/dz(p) = W(L) D(L-1) ... D(p), a (c x m(p)) matrix; G(L) = I.
Matrix logit_jacobian(const MlpModel& model, const SampleCache& cache, std::size_t p);

// Mean cross-entropy / 0-1 error over a dataset.
double mean_loss(const MlpModel& model, const Dataset& data);
double classification_error(const MlpModel& model, const Dataset& data);

// ---------------------------------------------------------------------------
// Flat parameter layout and checkpoints
// ---------------------------------------------------------------------------

// Canonical flat layout: for each layer p, vec(W(p)) row-major followed by
// b(p). Checkpoints store a one-line JSON header {layer_dims, seed, epoch},
// a newline, then this block as raw little-endian doubles.
Vector pack_parameters(const MlpModel& model);
void unpack_parameters(const Vector& flat, MlpModel& model);

void save_checkpoint(const MlpModel& model, const std::string& path,
                     std::uint64_t seed, std::size_t epoch);
MlpModel load_checkpoint(const std::string& path);

// Same framing for standalone matrices ({rows, cols} header).
void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

} // namespace hesskron

#endif
