#pragma once

#include <span>
#include <vector>

#include "wcse/matrix.hpp"

namespace wcse {

// Anchors h_i and m positive views; row i of every positive matrix is a
// positive of anchor i, and the other rows of view p are its negatives.
struct ContrastiveBatch {
    Matrix anchors;
    std::vector<Matrix> positives;
    double temperature = 0.05;
    double lambda_m = 1.0;

    std::size_t size() const noexcept { return anchors.rows(); }
    std::size_t num_positives() const noexcept { return positives.size(); }
};

struct LossValue {
    double value = 0.0;
    Matrix grad_anchors;
    std::vector<Matrix> grad_positives;
};

enum class LossKind { sum_out, sum_in };

double cosine_sim(std::span<const double> a, std::span<const double> b);

// -log softmax of the positive among the N rows of the positive view, mean over anchors.
LossValue info_nce(const ContrastiveBatch& batch);

// -lambda sum_p log softmax_p(i), summation over positives outside the log.
LossValue multi_pos_loss_sum_out(const ContrastiveBatch& batch);

// -log sum_p lambda exp(-s_ip / tau) / D_ip, summation inside the log.
LossValue multi_pos_loss_sum_in(const ContrastiveBatch& batch);

LossValue contrastive_loss(const ContrastiveBatch& batch, LossKind kind);

}  // namespace wcse
