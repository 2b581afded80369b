#include "wcse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"

namespace wcse {

namespace {

void require_unit_rows(const Matrix& m, const char* what) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double n = norm(m.row(r));
        if (std::abs(n - 1.0) > kUnitNormTolerance) {
            throw DegenerateInputError(std::string(what) + ": row " + std::to_string(r) +
                                       " has norm " + std::to_string(n) + ", expected 1");
        }
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double alignment_loss(const Matrix& x, const Matrix& y) {
    if (x.rows() == 0) throw InsufficientDataError("alignment needs at least one pair");
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ShapeError("alignment: pair matrices differ in shape");
    require_unit_rows(x, "alignment");
    require_unit_rows(y, "alignment");
    double total = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) total += squared_distance(x.row(r), y.row(r));
    return total / static_cast<double>(x.rows());
}

double uniformity_loss(const Matrix& points) {
    if (points.rows() < 2) {
        throw InsufficientDataError("uniformity needs at least 2 points, got " +
                                    std::to_string(points.rows()));
    }
    require_unit_rows(points, "uniformity");
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = i + 1; j < points.rows(); ++j)
            total += std::exp(-2.0 * squared_distance(points.row(i), points.row(j)));
    const double pairs = 0.5 * static_cast<double>(points.rows()) *
                         static_cast<double>(points.rows() - 1);
    return std::log(total / pairs);
}

Vector average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Vector ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("spearman: inputs differ in length");
    if (x.size() < 2) throw InsufficientDataError("spearman needs at least 2 observations");

    const Vector rx = average_ranks(x);
    const Vector ry = average_ranks(y);
    const double mean = 0.5 * static_cast<double>(x.size() + 1);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInputError("spearman correlation is undefined for a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace wcse
