#include "dsgd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dsgd/rng.hpp"

namespace dsgd {

Dataset gen_synthetic(int n, int classes, int dim, std::uint64_t seed) {
    if (n < 1 || classes < 1 || dim < 1)
        throw std::invalid_argument("gen_synthetic: n, classes, dim must be >= 1");

    Rng rng(derive_seed(seed, seed_tag::synth));
    std::vector<double> centers(static_cast<std::size_t>(classes) * dim);
    for (int c = 0; c < classes; ++c) {
        double norm = 0.0;
        double* ctr = centers.data() + static_cast<std::size_t>(c) * dim;
        for (int d = 0; d < dim; ++d) {
            ctr[d] = rng.normal();
            norm += ctr[d] * ctr[d];
        }
        norm = std::sqrt(norm);
        const double scale = norm > 0.0 ? 3.0 / norm : 0.0;
        for (int d = 0; d < dim; ++d) ctr[d] *= scale;
    }

    Dataset ds;
    ds.n = n;
    ds.dim = dim;
    ds.classes = classes;
    ds.features.resize(static_cast<std::size_t>(n) * dim);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int c = i % classes;
        ds.labels[i] = c;
        const double* ctr = centers.data() + static_cast<std::size_t>(c) * dim;
        double* row = ds.features.data() + static_cast<std::size_t>(i) * dim;
        for (int d = 0; d < dim; ++d) row[d] = ctr[d] + rng.normal();
    }
    return ds;
}

namespace {
constexpr int kCifarRecordBytes = 3073;
constexpr int kCifarPixels = 3072;
}  // namespace

Dataset read_cifar10_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_cifar10_bin: cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::int64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    if (bytes % kCifarRecordBytes != 0)
        throw std::runtime_error("read_cifar10_bin: truncated file, " + std::to_string(bytes) +
                                 " bytes is not a multiple of 3073");
    const int n = static_cast<int>(bytes / kCifarRecordBytes);
    if (n == 0) throw std::runtime_error("read_cifar10_bin: empty file");

    Dataset ds;
    ds.n = n;
    ds.dim = kCifarPixels;
    ds.classes = 10;
    ds.features.resize(static_cast<std::size_t>(n) * kCifarPixels);
    ds.labels.resize(n);

    std::vector<unsigned char> record(kCifarRecordBytes);
    for (int i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(record.data()), kCifarRecordBytes);
        if (!in) throw std::runtime_error("read_cifar10_bin: read failed at record " + std::to_string(i));
        if (record[0] > 9)
            throw std::runtime_error("read_cifar10_bin: label byte " + std::to_string(record[0]) +
                                     " > 9 at record " + std::to_string(i));
        ds.labels[i] = record[0];
        double* row = ds.features.data() + static_cast<std::size_t>(i) * kCifarPixels;
        for (int p = 0; p < kCifarPixels; ++p) row[p] = record[p + 1] / 255.0;
    }
    return ds;
}

void write_cifar10_bin(const std::string& path, const Dataset& ds) {
    if (ds.dim != kCifarPixels)
        throw std::invalid_argument("write_cifar10_bin: dataset dim must be 3072");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_cifar10_bin: cannot open " + path);
    std::vector<unsigned char> record(kCifarRecordBytes);
    for (int i = 0; i < ds.n; ++i) {
        record[0] = static_cast<unsigned char>(ds.labels[i]);
        const double* row = ds.features.data() + static_cast<std::size_t>(i) * kCifarPixels;
        for (int p = 0; p < kCifarPixels; ++p) {
            const double v = std::clamp(row[p], 0.0, 1.0);
            record[p + 1] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(record.data()), kCifarRecordBytes);
    }
    if (!out) throw std::runtime_error("write_cifar10_bin: write failed");
}

DataPartition split_data(const Dataset& ds, int S, std::uint64_t seed) {
    if (S < 1) throw std::invalid_argument("split_data: S must be >= 1");
    if (S > ds.n) throw std::invalid_argument("split_data: S exceeds dataset size");

    std::vector<int> perm(ds.n);
    for (int i = 0; i < ds.n; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, seed_tag::split));
    for (int i = ds.n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }

    DataPartition part;
    part.subsets.resize(S);
    const int base = ds.n / S;
    const int extra = ds.n % S;
    int pos = 0;
    for (int s = 0; s < S; ++s) {
        const int size = base + (s < extra ? 1 : 0);
        part.subsets[s].assign(perm.begin() + pos, perm.begin() + pos + size);
        pos += size;
    }
    return part;
}

MiniBatch sample_minibatch(const DataPartition& part, int s, int B, std::int64_t t,
                           std::uint64_t stream_seed) {
    if (B < 1) throw std::invalid_argument("sample_minibatch: B must be >= 1");
    if (s < 1 || s > part.S()) throw std::invalid_argument("sample_minibatch: group out of range");
    const auto& subset = part.subsets[s - 1];
    if (subset.empty()) throw std::invalid_argument("sample_minibatch: empty subset");

    Rng rng(derive_seed(stream_seed, static_cast<std::uint64_t>(t)));
    MiniBatch batch;
    batch.batch_id = t;
    batch.group = s;
    batch.indices.resize(B);
    for (int i = 0; i < B; ++i)
        batch.indices[i] = subset[rng.uniform_index(subset.size())];
    return batch;
}

void assemble_batch(const Dataset& ds, const std::vector<int>& indices, Mat& features,
                    std::vector<int>& labels) {
    const int B = static_cast<int>(indices.size());
    features = Mat(ds.dim, B);
    labels.resize(B);
    for (int j = 0; j < B; ++j) {
        const double* row = ds.sample(indices[j]);
        for (int i = 0; i < ds.dim; ++i) features(i, j) = row[i];
        labels[j] = ds.labels[indices[j]];
    }
}

}  // namespace dsgd
