#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jcm/mat.hpp"

namespace jcm {

// Labeled source vectors in [0,1]^k with class structure a small network can
// learn. Stands in for the image datasets of the full-scale setting.
struct Dataset {
    Mat x;  // N x k
    std::vector<int> labels;  // 0-based, in [0, num_classes)
    int k = 0;
    int num_classes = 0;
    std::string split = "train";
    std::uint64_t seed = 0;

    int size() const { return x.rows; }
};

// Gaussian blobs around class centers drawn once on a fixed lattice inside
// [0.2, 0.8]^k; samples are center + N(0, sigma_c^2) clipped to [0,1].
Dataset gen_gaussian_mixture(int k, int num_classes, int samples_per_class, double sigma_c,
                             std::uint64_t seed);

// side x side binary shape images (horizontal bar, vertical bar, cross,
// blank) plus uniform +-noise, clipped to [0,1]. num_classes <= 4.
Dataset gen_toy_images(int side, int num_classes, int samples_per_class, double noise,
                       std::uint64_t seed);

// Deterministic index-disjoint split: the first train_per_class samples of
// each class go to "train", the rest to "val".
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, int train_per_class);

// Versioned binary file: magic "JCMD", little-endian 32-bit float samples.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace jcm
