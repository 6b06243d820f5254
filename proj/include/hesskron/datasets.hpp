#ifndef HESSKRON_DATASETS_HPP
#define HESSKRON_DATASETS_HPP

#include "hesskron/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hesskron {

// Labeled classification dataset: one flattened sample per row of `inputs`.
struct Dataset {
    Matrix inputs;                    // N x d
    std::vector<std::size_t> labels;  // length N, values in [0, num_classes)
    std::size_t num_classes = 0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return inputs.cols(); }

    void validate() const; // throws precondition_error on broken invariants
};

// Read an IDX image/label pair (gzip-compressed files accepted). Pixels are
// scaled from [0,255] to [0,1]; images flattened row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Collapse 10-class labels onto 2: {0..4} -> 0, {5..9} -> 1.
Dataset relabel_mnist2(const Dataset& d);

// Replace labels with i.i.d. uniform draws over [0, num_classes).
Dataset randomize_labels(const Dataset& d, std::uint64_t seed);

// Rows i.i.d. N(0, I_dim), labels uniform.
Dataset gaussian_synthetic(std::size_t n_samples, std::size_t dim,
                           std::size_t num_classes, std::uint64_t seed);

// Seeded shuffle, keep the first n rows.
Dataset subset(const Dataset& d, std::size_t n, std::uint64_t seed);

} // namespace hesskron

#endif
