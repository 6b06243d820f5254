#include "hesskron/datasets.hpp"

#include "hesskron/errors.hpp"
#include "hesskron/rng.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace hesskron {

void Dataset::validate() const {
    if (inputs.rows() != labels.size())
        throw precondition_error("Dataset: row count does not match label count");
    if (num_classes == 0) throw precondition_error("Dataset: num_classes is zero");
    for (std::size_t l : labels)
        if (l >= num_classes) throw precondition_error("Dataset: label out of range");
    if (!inputs.all_finite()) throw precondition_error("Dataset: non-finite inputs");
}

namespace {

// Reads a whole file through zlib; gzFile transparently handles both plain
// and gzip-compressed content.
std::vector<unsigned char> read_file_bytes(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw io_error("cannot open " + path);
    std::vector<unsigned char> bytes;
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0) bytes.insert(bytes.end(), buf, buf + n);
    const bool bad = (n < 0);
    gzclose(f);
    if (bad) throw format_error("decompression failed for " + path);
    return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
    if (off + 4 > b.size()) throw format_error("IDX file truncated");
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) |
           static_cast<std::uint32_t>(b[off + 3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file_bytes(images_path);
    const auto lab = read_file_bytes(labels_path);

    if (read_be32(img, 0) != 0x00000803u)
        throw format_error("bad image magic in " + images_path);
    if (read_be32(lab, 0) != 0x00000801u)
        throw format_error("bad label magic in " + labels_path);

    const std::size_t n_img = read_be32(img, 4);
    const std::size_t rows = read_be32(img, 8);
    const std::size_t cols = read_be32(img, 12);
    const std::size_t n_lab = read_be32(lab, 4);
    if (n_img != n_lab)
        throw format_error("image/label count mismatch: " + std::to_string(n_img) +
                           " vs " + std::to_string(n_lab));

    const std::size_t d = rows * cols;
    if (img.size() < 16 + n_img * d) throw format_error("image payload truncated");
    if (lab.size() < 8 + n_lab) throw format_error("label payload truncated");

    Dataset out;
    out.inputs = Matrix(n_img, d);
    out.labels.resize(n_img);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < n_img; ++i) {
        double* row = out.inputs.row(i);
        const unsigned char* src = img.data() + 16 + i * d;
        for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<double>(src[j]) / 255.0;
        out.labels[i] = lab[8 + i];
        max_label = std::max(max_label, out.labels[i]);
    }
    out.num_classes = max_label + 1;
    // MNIST-shaped files always carry 10 classes even if a subset lacks some.
    if (out.num_classes < 10 && d == 784) out.num_classes = 10;
    out.name = "idx";
    out.validate();
    return out;
}

Dataset relabel_mnist2(const Dataset& d) {
    if (d.num_classes != 10)
        throw precondition_error("relabel_mnist2: expected 10 classes, got " +
                                 std::to_string(d.num_classes));
    Dataset out = d;
    for (std::size_t& l : out.labels) l = (l <= 4) ? 0 : 1;
    out.num_classes = 2;
    out.name = d.name + "-2";
    return out;
}

Dataset randomize_labels(const Dataset& d, std::uint64_t seed) {
    Dataset out = d;
    SplitMix64 rng(seed);
    for (std::size_t& l : out.labels) l = rng.next_below(d.num_classes);
    out.name = d.name + "-r";
    return out;
}

Dataset gaussian_synthetic(std::size_t n_samples, std::size_t dim,
                           std::size_t num_classes, std::uint64_t seed) {
    if (n_samples < 1 || dim < 1 || num_classes < 1)
        throw precondition_error("gaussian_synthetic: all counts must be >= 1");
    Dataset out;
    out.inputs = Matrix(n_samples, dim);
    out.labels.resize(n_samples);
    out.num_classes = num_classes;
    out.name = "gaussian";
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n_samples; ++i) {
        double* row = out.inputs.row(i);
        for (std::size_t j = 0; j < dim; ++j) row[j] = rng.next_gaussian();
        out.labels[i] = rng.next_below(num_classes);
    }
    return out;
}

Dataset subset(const Dataset& d, std::size_t n, std::uint64_t seed) {
    if (n > d.size())
        throw precondition_error("subset: n = " + std::to_string(n) + " exceeds N = " +
                                 std::to_string(d.size()));
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    rng.shuffle(idx);

    Dataset out;
    out.inputs = Matrix(n, d.dim());
    out.labels.resize(n);
    out.num_classes = d.num_classes;
    out.name = d.name + "-sub" + std::to_string(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(out.inputs.row(i), d.inputs.row(idx[i]), d.dim() * sizeof(double));
        out.labels[i] = d.labels[idx[i]];
    }
    return out;
}

} // namespace hesskron
