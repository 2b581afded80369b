#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wcse/matrix.hpp"

namespace wcse {

// Running mean/covariance with exponential momentum.
struct WhiteningStats {
    Vector mean;
    Matrix cov;
    double momentum = 0.95;
    std::size_t update_count = 0;

    static WhiteningStats empty(std::size_t dim, double momentum);
    // Exact statistics of one batch (update_count = 1).
    static WhiteningStats from_batch(const Matrix& batch, double momentum = 0.0);

    std::size_t dim() const noexcept { return mean.size(); }
};

// mu <- beta mu + (1 - beta) batch_mean, Sigma <- beta Sigma + (1 - beta) batch_cov.
// The first update adopts the batch statistics directly.
WhiteningStats update_stats(const WhiteningStats& stats, const Matrix& batch);

enum class WhiteningKind { pca, zca };

struct WhiteningMatrix {
    WhiteningKind kind = WhiteningKind::zca;
    Matrix w;
    double ridge = 0.0;
    // Eigenvectors U of Sigma + ridge I; ZCA = U * PCA.
    Matrix rotation;
    Vector eigenvalues;
};

inline constexpr double kEigenvalueFloor = 1e-10;
inline constexpr double kNegativeClamp = 1e-9;

// Eigendecompose Sigma + ridge I = U Lambda U^T.
// PCA: W = Lambda^{-1/2} U^T.  ZCA: W = U Lambda^{-1/2} U^T.
WhiteningMatrix derive_whitening(const WhiteningStats& stats, WhiteningKind kind,
                                 double ridge = 0.0);

// H = (Z - mu) W^T, rows are samples.
Matrix apply_whitening(const Matrix& batch, const Vector& mean, const WhiteningMatrix& w);
Matrix apply_whitening(const Matrix& batch, const WhiteningStats& stats, const WhiteningMatrix& w);

// A channel permutation split into contiguous groups of `group_size`.
// Permuted column c holds input column permutation[c]; group k owns permuted
// columns [k*g, (k+1)*g).
struct GroupPlan {
    std::size_t dim = 0;
    std::size_t group_size = 0;
    std::vector<std::size_t> permutation;
    std::uint64_t seed = 0;

    std::size_t num_groups() const noexcept { return group_size == 0 ? 0 : dim / group_size; }
    std::vector<std::size_t> inverse() const;
    // Input channels that make up group k, in permuted order.
    std::vector<std::size_t> group_channels(std::size_t k) const;
    bool is_identity() const noexcept;
};

GroupPlan make_group_plan(std::size_t dim, std::size_t group_size, bool shuffled,
                          std::uint64_t seed);

Matrix permute_columns(const Matrix& z, const GroupPlan& plan);
Matrix unpermute_columns(const Matrix& z, const GroupPlan& plan);

// Per-group statistics of `batch` under `plan`.
std::vector<WhiteningStats> group_batch_stats(const Matrix& batch, const GroupPlan& plan,
                                              double momentum = 0.0);
// Folds `batch` into existing per-group momentum statistics.
std::vector<WhiteningStats> update_group_stats(const std::vector<WhiteningStats>& stats,
                                               const Matrix& batch, const GroupPlan& plan);

// shuffled^{-1}( concat_k( whiten(group k) ) ( shuffled(Z) ) )
Matrix group_whiten(const Matrix& batch, const GroupPlan& plan,
                    const std::vector<WhiteningStats>& group_stats, WhiteningKind kind,
                    double ridge = 0.0);

// Ridge used for batch-estimated group statistics: eps * tr(Sigma) / g when
// the batch has too few rows for a full-rank g x g covariance, else zero.
double rank_deficiency_ridge(const WhiteningStats& stats, std::size_t batch_rows, double eps);

inline constexpr double kDefaultRidgeEps = 1e-5;

// Frozen per-group whitening transform. Mean and W are constants of the
// forward pass, so the backward pass is linear.
class GroupWhitener {
public:
    GroupWhitener() = default;
    GroupWhitener(GroupPlan plan, std::vector<Vector> means, std::vector<WhiteningMatrix> ws);

    // Batch statistics of `batch` under `plan`, ZCA per group.
    static GroupWhitener fit(const Matrix& batch, const GroupPlan& plan,
                             double ridge_eps = kDefaultRidgeEps);
    // From (e.g. momentum) statistics, ZCA per group with ridge eps*tr/g.
    static GroupWhitener from_stats(const GroupPlan& plan,
                                    const std::vector<WhiteningStats>& stats, double ridge_eps);

    Matrix apply(const Matrix& batch) const;
    // dL/dZ given dL/dH.
    Matrix backward(const Matrix& grad_out) const;

    const GroupPlan& plan() const noexcept { return plan_; }
    const std::vector<Vector>& means() const noexcept { return means_; }
    const std::vector<WhiteningMatrix>& matrices() const noexcept { return ws_; }

private:
    GroupPlan plan_;
    std::vector<Vector> means_;
    std::vector<WhiteningMatrix> ws_;
};

// Seed of the j-th view's plan.
std::uint64_t view_plan_seed(std::uint64_t base_seed, std::size_t view);

// m shuffled-group-whitened views of one batch, each under an independent
// random plan and the batch's own statistics.
std::vector<Matrix> sgw_augment(const Matrix& batch, std::size_t group_size, std::size_t num_views,
                                std::uint64_t base_seed, double ridge_eps = kDefaultRidgeEps);

}  // namespace wcse
