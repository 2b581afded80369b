#include "wcse/whitening.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"
#include "wcse/rng.hpp"

namespace wcse {

WhiteningStats WhiteningStats::empty(std::size_t dim, double momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("momentum must lie in [0, 1), got " + std::to_string(momentum));
    return {Vector(dim, 0.0), Matrix(dim, dim), momentum, 0};
}

WhiteningStats WhiteningStats::from_batch(const Matrix& batch, double momentum) {
    return update_stats(empty(batch.cols(), momentum), batch);
}

WhiteningStats update_stats(const WhiteningStats& stats, const Matrix& batch) {
    if (batch.cols() != stats.dim()) {
        throw ShapeError("update_stats: batch has " + std::to_string(batch.cols()) +
                         " columns, stats have dimension " + std::to_string(stats.dim()));
    }
    const Vector batch_mean = column_mean(batch);
    const Matrix batch_cov = covariance(batch, batch_mean);

    WhiteningStats next = stats;
    next.update_count = stats.update_count + 1;
    if (stats.update_count == 0) {
        next.mean = batch_mean;
        next.cov = batch_cov;
        return next;
    }
    const double beta = stats.momentum;
    for (std::size_t i = 0; i < next.mean.size(); ++i)
        next.mean[i] = beta * stats.mean[i] + (1.0 - beta) * batch_mean[i];
    auto cov = next.cov.data();
    auto old_cov = stats.cov.data();
    auto new_cov = batch_cov.data();
    for (std::size_t i = 0; i < cov.size(); ++i)
        cov[i] = beta * old_cov[i] + (1.0 - beta) * new_cov[i];
    return next;
}

WhiteningMatrix derive_whitening(const WhiteningStats& stats, WhiteningKind kind, double ridge) {
    if (stats.update_count == 0)
        throw InsufficientDataError("whitening statistics have never been updated");
    if (!(ridge >= 0.0)) throw ConfigError("ridge must be non-negative");

    const std::size_t d = stats.dim();
    Matrix regularized = symmetrize(stats.cov);
    for (std::size_t i = 0; i < d; ++i) regularized(i, i) += ridge;

    EigenDecomposition eig = sym_eig(regularized);
    Vector inv_sqrt(d);
    for (std::size_t k = 0; k < d; ++k) {
        double lambda = eig.eigenvalues[k];
        if (lambda < 0.0 && lambda >= -kNegativeClamp) lambda = 0.0;
        if (lambda < kEigenvalueFloor) {
            throw SingularCovarianceError(
                "eigenvalue " + std::to_string(eig.eigenvalues[k]) + " (index " +
                    std::to_string(k) + ", ridge " + std::to_string(ridge) +
                    ") is below the floor 1e-10",
                eig.eigenvalues[k]);
        }
        inv_sqrt[k] = 1.0 / std::sqrt(lambda);
    }

    // PCA: row k of W is lambda_k^{-1/2} u_k^T.
    Matrix pca(d, d);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t c = 0; c < d; ++c) pca(k, c) = inv_sqrt[k] * eig.eigenvectors(c, k);

    WhiteningMatrix out;
    out.kind = kind;
    out.ridge = ridge;
    out.w = kind == WhiteningKind::zca ? matmul(eig.eigenvectors, pca) : pca;
    out.rotation = std::move(eig.eigenvectors);
    out.eigenvalues = std::move(eig.eigenvalues);
    return out;
}

Matrix apply_whitening(const Matrix& batch, const Vector& mean, const WhiteningMatrix& w) {
    if (batch.cols() != mean.size() || w.w.cols() != batch.cols() || w.w.rows() != w.w.cols()) {
        throw ShapeError("apply_whitening: batch has " + std::to_string(batch.cols()) +
                         " columns, mean " + std::to_string(mean.size()) + ", W " +
                         std::to_string(w.w.rows()) + "x" + std::to_string(w.w.cols()));
    }
    Matrix centered = batch;
    for (std::size_t r = 0; r < centered.rows(); ++r) {
        auto row = centered.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] -= mean[c];
    }
    return matmul_transposed(centered, w.w);
}

Matrix apply_whitening(const Matrix& batch, const WhiteningStats& stats, const WhiteningMatrix& w) {
    return apply_whitening(batch, stats.mean, w);
}

std::vector<std::size_t> GroupPlan::inverse() const {
    std::vector<std::size_t> inv(permutation.size());
    for (std::size_t c = 0; c < permutation.size(); ++c) inv[permutation[c]] = c;
    return inv;
}

std::vector<std::size_t> GroupPlan::group_channels(std::size_t k) const {
    return {permutation.begin() + static_cast<std::ptrdiff_t>(k * group_size),
            permutation.begin() + static_cast<std::ptrdiff_t>((k + 1) * group_size)};
}

bool GroupPlan::is_identity() const noexcept {
    for (std::size_t c = 0; c < permutation.size(); ++c)
        if (permutation[c] != c) return false;
    return true;
}

GroupPlan make_group_plan(std::size_t dim, std::size_t group_size, bool shuffled,
                          std::uint64_t seed) {
    if (group_size == 0 || dim == 0 || dim % group_size != 0) {
        throw ConfigError("group size " + std::to_string(group_size) + " does not divide dim " +
                          std::to_string(dim));
    }
    GroupPlan plan{dim, group_size, std::vector<std::size_t>(dim), seed};
    std::iota(plan.permutation.begin(), plan.permutation.end(), 0);
    // A single group is the whole feature; ordering inside it is irrelevant.
    if (shuffled && group_size < dim) {
        Rng rng(seed);
        rng.shuffle(plan.permutation);
    }
    return plan;
}

namespace {

void check_plan(const Matrix& z, const GroupPlan& plan) {
    if (z.cols() != plan.dim || plan.permutation.size() != plan.dim) {
        throw ShapeError("plan dimension " + std::to_string(plan.dim) +
                         " does not match batch width " + std::to_string(z.cols()));
    }
}

}  // namespace

Matrix permute_columns(const Matrix& z, const GroupPlan& plan) {
    check_plan(z, plan);
    Matrix out(z.rows(), z.cols());
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < z.cols(); ++c) out(r, c) = z(r, plan.permutation[c]);
    return out;
}

Matrix unpermute_columns(const Matrix& z, const GroupPlan& plan) {
    check_plan(z, plan);
    Matrix out(z.rows(), z.cols());
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < z.cols(); ++c) out(r, plan.permutation[c]) = z(r, c);
    return out;
}

std::vector<WhiteningStats> group_batch_stats(const Matrix& batch, const GroupPlan& plan,
                                              double momentum) {
    const Matrix permuted = permute_columns(batch, plan);
    std::vector<WhiteningStats> stats;
    stats.reserve(plan.num_groups());
    for (std::size_t k = 0; k < plan.num_groups(); ++k) {
        stats.push_back(WhiteningStats::from_batch(
            permuted.col_block(k * plan.group_size, plan.group_size), momentum));
    }
    return stats;
}

std::vector<WhiteningStats> update_group_stats(const std::vector<WhiteningStats>& stats,
                                               const Matrix& batch, const GroupPlan& plan) {
    if (stats.size() != plan.num_groups())
        throw ShapeError("expected one statistics object per group");
    const Matrix permuted = permute_columns(batch, plan);
    std::vector<WhiteningStats> next;
    next.reserve(stats.size());
    for (std::size_t k = 0; k < stats.size(); ++k) {
        next.push_back(
            update_stats(stats[k], permuted.col_block(k * plan.group_size, plan.group_size)));
    }
    return next;
}

Matrix group_whiten(const Matrix& batch, const GroupPlan& plan,
                    const std::vector<WhiteningStats>& group_stats, WhiteningKind kind,
                    double ridge) {
    check_plan(batch, plan);
    if (group_stats.size() != plan.num_groups()) {
        throw ShapeError("group_whiten: " + std::to_string(group_stats.size()) +
                         " statistics objects for " + std::to_string(plan.num_groups()) +
                         " groups");
    }
    const Matrix permuted = permute_columns(batch, plan);
    Matrix whitened(batch.rows(), batch.cols());
    for (std::size_t k = 0; k < plan.num_groups(); ++k) {
        const WhiteningStats& stats = group_stats[k];
        if (stats.dim() != plan.group_size)
            throw ShapeError("group statistics have the wrong dimension");
        const WhiteningMatrix w = derive_whitening(stats, kind, ridge);
        const std::size_t first = k * plan.group_size;
        whitened.set_col_block(
            first, apply_whitening(permuted.col_block(first, plan.group_size), stats, w));
    }
    return unpermute_columns(whitened, plan);
}

double rank_deficiency_ridge(const WhiteningStats& stats, std::size_t batch_rows, double eps) {
    const std::size_t g = stats.dim();
    if (batch_rows > g) return 0.0;
    double trace = 0.0;
    for (std::size_t i = 0; i < g; ++i) trace += stats.cov(i, i);
    return eps * trace / static_cast<double>(g);
}

GroupWhitener::GroupWhitener(GroupPlan plan, std::vector<Vector> means,
                             std::vector<WhiteningMatrix> ws)
    : plan_(std::move(plan)), means_(std::move(means)), ws_(std::move(ws)) {
    if (means_.size() != plan_.num_groups() || ws_.size() != plan_.num_groups())
        throw ShapeError("GroupWhitener: expected one mean and one matrix per group");
    for (std::size_t k = 0; k < ws_.size(); ++k) {
        if (means_[k].size() != plan_.group_size || ws_[k].w.rows() != plan_.group_size ||
            ws_[k].w.cols() != plan_.group_size)
            throw ShapeError("GroupWhitener: group transform has the wrong dimension");
    }
}

GroupWhitener GroupWhitener::fit(const Matrix& batch, const GroupPlan& plan, double ridge_eps) {
    std::vector<WhiteningStats> stats = group_batch_stats(batch, plan);
    std::vector<Vector> means;
    std::vector<WhiteningMatrix> ws;
    for (const auto& s : stats) {
        ws.push_back(derive_whitening(s, WhiteningKind::zca,
                                      rank_deficiency_ridge(s, batch.rows(), ridge_eps)));
        means.push_back(s.mean);
    }
    return {plan, std::move(means), std::move(ws)};
}

GroupWhitener GroupWhitener::from_stats(const GroupPlan& plan,
                                        const std::vector<WhiteningStats>& stats,
                                        double ridge_eps) {
    if (stats.size() != plan.num_groups())
        throw ShapeError("expected one statistics object per group");
    std::vector<Vector> means;
    std::vector<WhiteningMatrix> ws;
    for (const auto& s : stats) {
        double trace = 0.0;
        for (std::size_t i = 0; i < s.dim(); ++i) trace += s.cov(i, i);
        ws.push_back(derive_whitening(s, WhiteningKind::zca,
                                      ridge_eps * trace / static_cast<double>(s.dim())));
        means.push_back(s.mean);
    }
    return {plan, std::move(means), std::move(ws)};
}

Matrix GroupWhitener::apply(const Matrix& batch) const {
    const Matrix permuted = permute_columns(batch, plan_);
    Matrix whitened(batch.rows(), batch.cols());
    for (std::size_t k = 0; k < ws_.size(); ++k) {
        const std::size_t first = k * plan_.group_size;
        whitened.set_col_block(
            first, apply_whitening(permuted.col_block(first, plan_.group_size), means_[k], ws_[k]));
    }
    return unpermute_columns(whitened, plan_);
}

Matrix GroupWhitener::backward(const Matrix& grad_out) const {
    // H_k = (Z_k - mu_k) W_k^T  =>  dZ_k = dH_k W_k
    const Matrix permuted = permute_columns(grad_out, plan_);
    Matrix grad(grad_out.rows(), grad_out.cols());
    for (std::size_t k = 0; k < ws_.size(); ++k) {
        const std::size_t first = k * plan_.group_size;
        grad.set_col_block(first, matmul(permuted.col_block(first, plan_.group_size), ws_[k].w));
    }
    return unpermute_columns(grad, plan_);
}

std::uint64_t view_plan_seed(std::uint64_t base_seed, std::size_t view) {
    return derive_seed(base_seed, 0x5367ULL, view);
}

std::vector<Matrix> sgw_augment(const Matrix& batch, std::size_t group_size, std::size_t num_views,
                                std::uint64_t base_seed, double ridge_eps) {
    if (num_views == 0) throw ConfigError("sgw_augment needs at least one view");
    std::vector<Matrix> views;
    views.reserve(num_views);
    for (std::size_t j = 0; j < num_views; ++j) {
        const GroupPlan plan =
            make_group_plan(batch.cols(), group_size, true, view_plan_seed(base_seed, j));
        views.push_back(GroupWhitener::fit(batch, plan, ridge_eps).apply(batch));
    }
    return views;
}

}  // namespace wcse
