#pragma once

#include <span>

#include "wcse/matrix.hpp"

namespace wcse {

inline constexpr double kUnitNormTolerance = 1e-6;

// Mean of ||x_i - y_i||^2 over row pairs. Rows must be unit vectors.
double alignment_loss(const Matrix& x, const Matrix& y);

// log mean_{i<j} exp(-2 ||p_i - p_j||^2). Rows must be unit vectors.
double uniformity_loss(const Matrix& points);

// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Average (1-based) ranks; ties share the mean of their positions.
Vector average_ranks(std::span<const double> values);

}  // namespace wcse
