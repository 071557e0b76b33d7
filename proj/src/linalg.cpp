#include "matsense/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace matsense {

namespace {

void apply_sign_convention(Matrix& left, Matrix& right) {
    for (Index j = 0; j < left.cols(); ++j) {
        Index at = 0;
        double best = 0.0;
        for (Index i = 0; i < left.rows(); ++i) {
            double mag = std::abs(left(i, j));
            if (mag > best) {
                best = mag;
                at = i;
            }
        }
        if (left(at, j) < 0.0) {
            left.col(j) = -left.col(j);
            right.col(j) = -right.col(j);
        }
    }
}

Eigen::BDCSVD<Matrix> full_svd(const Matrix& a, unsigned options) { return Eigen::BDCSVD<Matrix>(a, options); }

}  // namespace

SvdTriple truncated_svd(const Matrix& a, Index r) {
    Index small = std::min(a.rows(), a.cols());
    if (r < 1 || r > small) throw std::invalid_argument("truncated_svd: rank out of range");
    auto svd = full_svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdTriple out;
    out.left = svd.matrixU().leftCols(r);
    out.values = svd.singularValues().head(r);
    out.right = svd.matrixV().leftCols(r);
    apply_sign_convention(out.left, out.right);
    return out;
}

Vector singular_values(const Matrix& a) { return full_svd(a, 0).singularValues(); }

namespace {

// Power iteration on AᵀA; used above the dense decomposition cutoff.
double spectral_iterative(const Matrix& a, double rel_tol = 1e-6, int max_iters = 500) {
    std::mt19937_64 rng(0x51e21a1u);  // fixed start
    Vector v = gaussian_vector(a.cols(), rng);
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector w = a.transpose() * (a * v);
        double s2 = w.norm();
        if (s2 == 0.0) return 0.0;
        v = w / s2;
        double sigma = std::sqrt(s2);
        if (it > 0 && std::abs(sigma - prev) <= rel_tol * sigma) return sigma;
        prev = sigma;
    }
    return prev;
}

}  // namespace

double norm(const Matrix& a, NormKind kind, int p) {
    switch (kind) {
        case NormKind::Frobenius:
            return a.norm();
        case NormKind::Spectral: {
            if (std::max(a.rows(), a.cols()) > 512) return spectral_iterative(a);
            return singular_values(a)(0);
        }
        case NormKind::Schatten: {
            if (p < 2) throw std::invalid_argument("norm: Schatten requires p >= 2");
            Vector s = singular_values(a);
            double acc = 0.0;
            for (Index i = 0; i < s.size(); ++i) acc += std::pow(s(i), double(p));
            return std::pow(acc, 1.0 / double(p));
        }
        case NormKind::KyFan: {
            Index small = std::min(a.rows(), a.cols());
            if (p < 1 || p > small) throw std::invalid_argument("norm: KyFan requires 1 <= p <= min dim");
            Vector s = singular_values(a);
            return s.head(p).sum();
        }
    }
    throw std::invalid_argument("norm: unknown kind");
}

namespace {

// Core MGS over columns; `against` holds orthonormal columns already fixed.
OrthoBasis mgs_columns(const Matrix& cols, const Matrix* against, double drop_tol) {
    OrthoBasis out;
    Matrix kept(cols.rows(), cols.cols());
    Index n_kept = 0;
    for (Index j = 0; j < cols.cols(); ++j) {
        Vector x = cols.col(j);
        double input_norm = x.norm();
        for (int pass = 0; pass < 2; ++pass) {
            if (against && against->cols() > 0) x -= *against * (against->transpose() * x);
            if (n_kept > 0) {
                auto basis = kept.leftCols(n_kept);
                x -= basis * (basis.transpose() * x);
            }
        }
        double res = x.norm();
        if (input_norm == 0.0 || res < drop_tol * input_norm) {
            out.dropped.push_back(j);
            continue;
        }
        kept.col(n_kept++) = x / res;
    }
    out.basis = kept.leftCols(n_kept);
    out.retained = n_kept;
    return out;
}

}  // namespace

OrthoBasis orthonormalize_columns(const Matrix& cols, const Matrix* against, double drop_tol) {
    return mgs_columns(cols, against, drop_tol);
}

OrthoBasis orthonormalize_rows(const Matrix& rows, const Matrix* against, double drop_tol) {
    Matrix cols = rows.transpose();
    Matrix against_cols;
    const Matrix* against_ptr = nullptr;
    if (against && against->rows() > 0) {
        against_cols = against->transpose();
        against_ptr = &against_cols;
    }
    OrthoBasis got = mgs_columns(cols, against_ptr, drop_tol);
    got.basis = Matrix(got.basis.transpose());
    return got;
}

BatchOrtho orthonormalize(const Matrix& rows, Index dim, const Matrix* against) {
    if (rows.cols() != dim * dim) throw std::invalid_argument("orthonormalize: rows must be dim^2 long");
    if (!rows.allFinite()) throw std::invalid_argument("orthonormalize: rows must be finite");
    OrthoBasis got = orthonormalize_rows(rows, against);
    return BatchOrtho{QueryBatch::dense(got.basis, dim), got.retained, std::move(got.dropped)};
}

MatvecQueries matvec_queries(const Vector& v) {
    double scale = v.norm();
    if (scale == 0.0) throw std::invalid_argument("matvec_queries: zero vector");
    Matrix unit = v / scale;
    return MatvecQueries{QueryBatch::matvec(QueryBatch::Side::Columns, unit, v.size()), scale};
}

MatvecQueries matvec_queries_adjoint(const Vector& v) {
    double scale = v.norm();
    if (scale == 0.0) throw std::invalid_argument("matvec_queries_adjoint: zero vector");
    Matrix unit = v / scale;
    return MatvecQueries{QueryBatch::matvec(QueryBatch::Side::Rows, unit, v.size()), scale};
}

Vector assemble_matvec(const Vector& responses, double scale) { return responses * scale; }

}  // namespace matsense
