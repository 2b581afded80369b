#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wcse/matrix.hpp"

namespace wcse {

// Gaussian clusters around centers drawn uniformly on the unit sphere.
// Rows are shuffled so that any contiguous slice mixes clusters.
struct SyntheticData {
    Matrix samples;
    std::vector<std::size_t> labels;
    Matrix centers;  // clusters x dim, unit rows

    SyntheticData slice(std::size_t first, std::size_t count) const;
};

SyntheticData generate_synthetic(std::size_t num_clusters, std::size_t per_cluster,
                                 std::size_t dim, double noise_scale, std::uint64_t seed);

// A pair of sample rows with a graded similarity label.
struct ScoredPair {
    std::size_t a;
    std::size_t b;
    double score;  // cosine of the two clusters' centers
};

// All unordered pairs of rows, labelled by center cosine.
std::vector<ScoredPair> scored_pairs(std::span<const std::size_t> labels, const Matrix& centers);

// Linear squeeze into a narrow cone: Z -> Z R diag(s) + offset, with a random
// rotation R, scales decaying as exp(-strength * k / (d - 1)) and an offset of
// length `strength` along a random direction.
Matrix make_anisotropic(const Matrix& z, double strength, std::uint64_t seed);

// Spearman correlation between pair labels and embedding cosines.
double pair_spearman(const Matrix& embeddings, std::span<const ScoredPair> pairs);

}  // namespace wcse
