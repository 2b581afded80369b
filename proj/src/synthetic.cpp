#include "wcse/synthetic.hpp"

#include <cmath>
#include <numeric>

#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"
#include "wcse/losses.hpp"
#include "wcse/metrics.hpp"
#include "wcse/rng.hpp"

namespace wcse {

SyntheticData SyntheticData::slice(std::size_t first, std::size_t count) const {
    if (first + count > samples.rows()) throw ShapeError("slice out of range");
    SyntheticData out{Matrix(count, samples.cols()), {}, centers};
    for (std::size_t r = 0; r < count; ++r) {
        auto src = samples.row(first + r);
        std::copy(src.begin(), src.end(), out.samples.row(r).begin());
        out.labels.push_back(labels[first + r]);
    }
    return out;
}

SyntheticData generate_synthetic(std::size_t num_clusters, std::size_t per_cluster,
                                 std::size_t dim, double noise_scale, std::uint64_t seed) {
    if (num_clusters == 0 || per_cluster == 0 || dim == 0)
        throw ConfigError("synthetic data needs clusters, per_cluster and dim >= 1");
    if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale must be >= 0");

    Rng rng(seed);
    Matrix centers(num_clusters, dim);
    for (std::size_t k = 0; k < num_clusters; ++k) {
        auto row = centers.row(k);
        double n = 0.0;
        do {
            for (double& v : row) v = rng.normal();
            n = norm(row);
        } while (n < 1e-8);
        for (double& v : row) v /= n;
    }

    const std::size_t total = num_clusters * per_cluster;
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    SyntheticData data{Matrix(total, dim), std::vector<std::size_t>(total), centers};
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t slot = order[i];
        const std::size_t k = i / per_cluster;
        data.labels[slot] = k;
        auto row = data.samples.row(slot);
        auto c = centers.row(k);
        for (std::size_t j = 0; j < dim; ++j) row[j] = c[j] + noise_scale * rng.normal();
    }
    return data;
}

std::vector<ScoredPair> scored_pairs(std::span<const std::size_t> labels, const Matrix& centers) {
    std::vector<ScoredPair> pairs;
    pairs.reserve(labels.size() * (labels.size() - (labels.empty() ? 0 : 1)) / 2);
    for (std::size_t a = 0; a < labels.size(); ++a) {
        for (std::size_t b = a + 1; b < labels.size(); ++b) {
            pairs.push_back({a, b, cosine_sim(centers.row(labels[a]), centers.row(labels[b]))});
        }
    }
    return pairs;
}

Matrix make_anisotropic(const Matrix& z, double strength, std::uint64_t seed) {
    const std::size_t d = z.cols();
    Rng rng(seed);
    Matrix sym(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) sym(i, j) = sym(j, i) = rng.normal();
    Matrix transform = sym_eig(sym).eigenvectors;  // random orthogonal
    for (std::size_t k = 0; k < d; ++k) {
        const double scale =
            d > 1 ? std::exp(-strength * static_cast<double>(k) / static_cast<double>(d - 1)) : 1.0;
        for (std::size_t r = 0; r < d; ++r) transform(r, k) *= scale;
    }
    Vector offset(d);
    for (double& v : offset) v = rng.normal();
    const double n = norm(offset);
    for (double& v : offset) v *= strength / n;

    Matrix out = matmul(z, transform);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < d; ++c) row[c] += offset[c];
    }
    return out;
}

double pair_spearman(const Matrix& embeddings, std::span<const ScoredPair> pairs) {
    Vector labels, predicted;
    labels.reserve(pairs.size());
    predicted.reserve(pairs.size());
    for (const auto& p : pairs) {
        labels.push_back(p.score);
        predicted.push_back(cosine_sim(embeddings.row(p.a), embeddings.row(p.b)));
    }
    return spearman(predicted, labels);
}

}  // namespace wcse
