#pragma once

#include "matsense/query.hpp"
#include "matsense/types.hpp"

#include <optional>
#include <vector>

namespace matsense {

/// Thin SVD factors: input ≈ left · diag(values) · rightᵀ, values nonincreasing.
/// Sign convention: each left column's largest-magnitude entry is nonnegative,
/// ties broken by lowest index.
struct SvdTriple {
    Matrix left;
    Vector values;
    Matrix right;

    Matrix reconstruct() const { return left * values.asDiagonal() * right.transpose(); }
};

SvdTriple truncated_svd(const Matrix& a, Index r);

/// All singular values, nonincreasing.
Vector singular_values(const Matrix& a);

enum class NormKind { Spectral, Frobenius, Schatten, KyFan };

/// Spectral/Frobenius ignore p.  Schatten requires p ≥ 2, KyFan 1 ≤ p ≤ min dim.
double norm(const Matrix& a, NormKind kind, int p = 0);

struct OrthoBasis {
    Matrix basis;                // retained orthonormal vectors, ⊥ the history
    Index retained = 0;
    std::vector<Index> dropped;  // input indices whose residual vanished
};

/// Modified Gram–Schmidt on rows with two unconditional re-orthogonalization
/// passes.  Rows whose residual falls below drop_tol × (input row norm) are
/// dropped and reported.
OrthoBasis orthonormalize_rows(const Matrix& rows, const Matrix* against = nullptr, double drop_tol = 1e-10);

/// Column version of the same routine (basis building for iteration bodies).
OrthoBasis orthonormalize_columns(const Matrix& cols, const Matrix* against = nullptr, double drop_tol = 1e-10);

struct BatchOrtho {
    QueryBatch batch;
    Index retained = 0;
    std::vector<Index> dropped;
};

/// Orthonormalize flattened measurement rows (dim² entries each) against an
/// optional accepted history; empty output signals fully degenerate input.
BatchOrtho orthonormalize(const Matrix& rows, Index dim, const Matrix* against = nullptr);

struct MatvecQueries {
    QueryBatch batch;   // n structured rows e_i ⊗ v/‖v‖ (or mirrored for adjoint)
    double scale;       // ‖v‖; responses × scale reassemble A·v
};

MatvecQueries matvec_queries(const Vector& v);
MatvecQueries matvec_queries_adjoint(const Vector& v);
Vector assemble_matvec(const Vector& responses, double scale);

}  // namespace matsense
