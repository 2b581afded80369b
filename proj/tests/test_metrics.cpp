#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "wcse/errors.hpp"
#include "wcse/metrics.hpp"

using namespace wcse;
using namespace wcse::testing;

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

// Spearman via 1 - 6 sum d^2 / (n (n^2 - 1)) for tie-free inputs, ranks from
// counting smaller elements.
double spearman_no_ties(const Vector& x, const Vector& y) {
    const std::size_t n = x.size();
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rx = 1.0, ry = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            rx += x[j] < x[i];
            ry += y[j] < y[i];
        }
        d2 += (rx - ry) * (rx - ry);
    }
    const double nn = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("alignment: identical, antipodal, scalar oracle") {
    Rng rng(1);
    const Matrix x = random_unit_rows(10, 6, rng);
    CHECK(alignment_loss(x, x) == 0.0);
    CHECK(alignment_loss(Matrix{{1, 0}}, Matrix{{-1, 0}}) == 4.0);

    const Matrix y = random_unit_rows(10, 6, rng);
    double expected = 0.0;
    for (std::size_t i = 0; i < 10; ++i) expected += sq_dist(x.row(i), y.row(i)) / 10.0;
    CHECK(std::abs(alignment_loss(x, y) - expected) <= 1e-12);
}

TEST_CASE("alignment: errors") {
    CHECK_THROWS_AS(alignment_loss(Matrix(0, 3), Matrix(0, 3)), InsufficientDataError);
    CHECK_THROWS_AS(alignment_loss(Matrix{{1, 0}}, Matrix{{1, 0}, {0, 1}}), ShapeError);
    CHECK_THROWS_AS(alignment_loss(Matrix{{2, 0}}, Matrix{{1, 0}}), DegenerateInputError);
}

TEST_CASE("uniformity: collapsed, antipodal, double-loop oracle") {
    const Matrix same{{0.6, 0.8}, {0.6, 0.8}, {0.6, 0.8}};
    CHECK(uniformity_loss(same) == 0.0);
    CHECK(uniformity_loss(Matrix{{0, 1}, {0, -1}}) == doctest::Approx(-8.0).epsilon(1e-15));

    Rng rng(2);
    const Matrix p = random_unit_rows(20, 5, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = i + 1; j < 20; ++j) total += std::exp(-2.0 * sq_dist(p.row(i), p.row(j)));
    CHECK(std::abs(uniformity_loss(p) - std::log(total / 190.0)) <= 1e-12);
}

TEST_CASE("uniformity: errors") {
    CHECK_THROWS_AS(uniformity_loss(Matrix{{1, 0}}), InsufficientDataError);
    CHECK_THROWS_AS(uniformity_loss(Matrix{{1, 0}, {0, 0.5}}), DegenerateInputError);
}

TEST_CASE("property: alignment >= 0 and uniformity in [-8, 0]") {
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 2 + rng.below(20), d = 1 + rng.below(8);
        const Matrix a = random_unit_rows(n, d, rng), b = random_unit_rows(n, d, rng);
        CHECK(alignment_loss(a, b) >= 0.0);
        const double u = uniformity_loss(a);
        CHECK(u >= -8.0);
        CHECK(u <= 0.0);
    }
}

TEST_CASE("property: spreading points lowers uniformity") {
    // Points on an arc of the unit circle, widening toward the full circle.
    double previous = 1.0;
    for (double width : {0.1, 0.5, 1.0, 2.0, 4.0, 6.0}) {
        Matrix p(12, 2);
        for (std::size_t i = 0; i < 12; ++i) {
            const double a = width * static_cast<double>(i) / 12.0;
            p(i, 0) = std::cos(a);
            p(i, 1) = std::sin(a);
        }
        const double u = uniformity_loss(p);
        CHECK(u < previous);
        previous = u;
    }
}

TEST_CASE("spearman: perfect, inverse, hand case") {
    const Vector x{1, 2, 3, 4, 5};
    CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(spearman(x, Vector{5, 4, 3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
    // Rank differences (1, 1, 1, 1, 0): 1 - 6 * 4 / 120.
    const Vector y{2, 1, 4, 3, 5};
    CHECK(spearman(x, y) == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(spearman(x, y) == doctest::Approx(spearman_no_ties(x, y)).epsilon(1e-14));
}

TEST_CASE("spearman: average ranks for ties") {
    CHECK(average_ranks(Vector{10, 20, 20, 5}) == Vector{2, 3.5, 3.5, 1});
    // Pearson of ranks (1.5, 1.5, 3) and (1, 2, 3).
    const double expected = 0.8660254037844386;
    CHECK(spearman(Vector{1, 1, 2}, Vector{1, 2, 3}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("spearman: errors") {
    CHECK_THROWS_AS(spearman(Vector{1, 1, 1}, Vector{1, 2, 3}), DegenerateInputError);
    CHECK_THROWS_AS(spearman(Vector{1, 2}, Vector{1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(spearman(Vector{1}, Vector{1}), InsufficientDataError);
}

TEST_CASE("property: spearman matches the rank-difference formula without ties") {
    Rng rng(4);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 2 + rng.below(40);
        Vector x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal() + 0.5 * x[i];
        }
        CHECK(std::abs(spearman(x, y) - spearman_no_ties(x, y)) <= 1e-10);
    }
}

TEST_CASE("property: spearman is invariant under increasing transforms") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 3 + rng.below(30);
        Vector x(n), y(n), fx(n), gy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = std::round(4.0 * (rng.normal() - x[i]));  // ties included
            fx[i] = std::exp(3.0 * x[i]) + 1.0;
            gy[i] = std::pow(y[i] + 100.0, 3.0);
        }
        const double r = spearman(x, y);
        CHECK(std::abs(spearman(fx, gy) - r) <= 1e-12);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
    }
}

}  // TEST_SUITE
