#pragma once

#include <cstddef>
#include <vector>

#include "wcse/matrix.hpp"

namespace wcse {

struct EigenDecomposition {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

struct NormalizedRows {
    Matrix rows;
    // Indices of rows whose norm was below 1e-12; those rows are left as-is.
    std::vector<std::size_t> degenerate;
};

struct JacobiOptions {
    double tolerance = 1e-11;  // off-diagonal Frobenius norm relative to ||A||_F
    int max_sweeps = 100;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

Vector column_mean(const Matrix& z);

// Population covariance (1/N) (Z - mean)^T (Z - mean), exactly symmetric.
Matrix covariance(const Matrix& z, const Vector& mean);

// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

// Cyclic Jacobi eigensolver for symmetric matrices. The input is
// symmetrized first; asymmetry above 1e-9 is rejected.
EigenDecomposition sym_eig(const Matrix& a, const JacobiOptions& options = {});

// U diag(lambda) U^T
Matrix reconstruct(const EigenDecomposition& eig);

NormalizedRows l2_normalize_rows(const Matrix& z);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

}  // namespace wcse
