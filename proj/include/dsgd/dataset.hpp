#ifndef DSGD_DATASET_HPP
#define DSGD_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dsgd/mat.hpp"

namespace dsgd {

struct Dataset {
    int n = 0;
    int dim = 0;
    int classes = 0;
    std::vector<double> features;  // row-major n x dim
    std::vector<int> labels;       // values in [0 .. classes-1]

    const double* sample(int i) const { return features.data() + static_cast<std::size_t>(i) * dim; }
};

// Disjoint index subsets covering [0..n-1], one per data-group.
struct DataPartition {
    std::vector<std::vector<int>> subsets;
    int S() const { return static_cast<int>(subsets.size()); }
};

struct MiniBatch {
    std::int64_t batch_id = -1;
    int group = 1;  // owning data-group s, 1-based
    std::vector<int> indices;
};

// Gaussian blobs: one unit-variance cluster per class, centers drawn at
// seeded random directions of norm 3. Labels assigned round-robin.
Dataset gen_synthetic(int n, int classes, int dim, std::uint64_t seed);

// CIFAR-10 binary layout: records of 3073 bytes, 1 label byte (0-9) followed
// by 3072 pixel bytes; pixels scaled to [0,1]. Throws on truncated files or
// label bytes > 9.
Dataset read_cifar10_bin(const std::string& path);

// Writes records in the same binary layout (pixels are clamped to [0,1] and
// quantized back to bytes). Used for round-trip checks and small fixtures.
void write_cifar10_bin(const std::string& path, const Dataset& ds);

// Seeded permutation, then contiguous chunks whose sizes differ by at most
// one. Requires S <= n.
DataPartition split_data(const Dataset& ds, int S, std::uint64_t seed);

// B indices drawn uniformly with replacement from subset s (1-based). The
// draw depends only on (stream_seed, t), not on call history.
MiniBatch sample_minibatch(const DataPartition& part, int s, int B, std::int64_t t,
                           std::uint64_t stream_seed);

// Assembles the feature block (dim x B, one column per sample) and labels.
void assemble_batch(const Dataset& ds, const std::vector<int>& indices, Mat& features,
                    std::vector<int>& labels);

}  // namespace dsgd

#endif  // DSGD_DATASET_HPP
