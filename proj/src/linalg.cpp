#include "wcse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wcse/errors.hpp"

namespace wcse {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_transposed: inner dimensions " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector column_mean(const Matrix& z) {
    if (z.rows() == 0) throw InsufficientDataError("mean of an empty batch");
    Vector mean(z.cols(), 0.0);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < z.cols(); ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= static_cast<double>(z.rows());
    return mean;
}

Matrix covariance(const Matrix& z, const Vector& mean) {
    if (z.rows() < 2) {
        throw InsufficientDataError("covariance needs at least 2 rows, got " +
                                    std::to_string(z.rows()));
    }
    if (mean.size() != z.cols()) throw ShapeError("covariance: mean length != column count");

    const std::size_t d = z.cols();
    Matrix cov(d, d);
    Vector centered(d);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - mean[c];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) cov(i, j) += centered[i] * centered[j];
    }
    const double inv_n = 1.0 / static_cast<double>(z.rows());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= inv_n;
            cov(j, i) = cov(i, j);
        }
    }
    return cov;
}

Matrix symmetrize(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("symmetrize: matrix is not square");
    Matrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

// A <- J^T A J and V <- V J for the rotation in the (p, q) plane that
// annihilates A(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;

    const std::size_t n = a.rows();
    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& input, const JacobiOptions& options) {
    if (input.rows() != input.cols()) {
        throw ShapeError("sym_eig: matrix is " + std::to_string(input.rows()) + "x" +
                         std::to_string(input.cols()));
    }
    const std::size_t n = input.rows();
    const double scale = std::max(1.0, input.max_abs());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(input(i, j) - input(j, i)) > 1e-9 * scale)
                throw ShapeError("sym_eig: matrix is not symmetric");
        }
    }

    Matrix a = symmetrize(input);
    Matrix v = Matrix::identity(n);
    const double threshold = options.tolerance * a.frobenius();

    double residual = off_diagonal_norm(a);
    int sweep = 0;
    while (residual > threshold) {
        if (sweep == options.max_sweeps) {
            throw ConvergenceError("Jacobi did not converge in " +
                                       std::to_string(options.max_sweeps) +
                                       " sweeps; off-diagonal residual " + std::to_string(residual),
                                   residual);
        }
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
        residual = off_diagonal_norm(a);
        ++sweep;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
    }
    return out;
}

Matrix reconstruct(const EigenDecomposition& eig) {
    const Matrix& u = eig.eigenvectors;
    Matrix scaled = u;
    for (std::size_t r = 0; r < u.rows(); ++r)
        for (std::size_t c = 0; c < u.cols(); ++c) scaled(r, c) *= eig.eigenvalues[c];
    return matmul_transposed(scaled, u);
}

NormalizedRows l2_normalize_rows(const Matrix& z) {
    NormalizedRows out{z, {}};
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = out.rows.row(r);
        const double n = norm(row);
        if (n < 1e-12) {
            out.degenerate.push_back(r);
            continue;
        }
        for (double& v : row) v /= n;
    }
    return out;
}

}  // namespace wcse
