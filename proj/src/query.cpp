#include "matsense/query.hpp"

#include <cmath>

namespace matsense {

QueryBatch QueryBatch::dense(Matrix rows, Index dim) {
    if (rows.cols() != dim * dim) throw std::invalid_argument("QueryBatch::dense: rows must have dim^2 columns");
    return QueryBatch(Dense{std::move(rows)}, dim);
}

QueryBatch QueryBatch::matvec(Side side, Matrix unit_vectors, Index dim) {
    if (unit_vectors.rows() != dim) throw std::invalid_argument("QueryBatch::matvec: vectors must have dim rows");
    return QueryBatch(Matvec{side, std::move(unit_vectors)}, dim);
}

QueryBatch QueryBatch::rank_one(Matrix left, Matrix right, Index dim) {
    if (left.rows() != dim || right.rows() != dim || left.cols() != right.cols())
        throw std::invalid_argument("QueryBatch::rank_one: factor shape mismatch");
    return QueryBatch(RankOne{std::move(left), std::move(right)}, dim);
}

Index QueryBatch::row_count() const {
    if (is_dense()) return std::get<Dense>(storage_).rows.rows();
    if (is_matvec()) return dim_ * std::get<Matvec>(storage_).vectors.cols();
    return std::get<RankOne>(storage_).left.cols();
}

Vector QueryBatch::responses_on(const Matrix& m) const {
    if (is_dense()) {
        return std::get<Dense>(storage_).rows * vec_rowmajor(m);
    }
    if (is_matvec()) {
        const Matvec& mv = std::get<Matvec>(storage_);
        Vector out(row_count());
        for (Index g = 0; g < mv.vectors.cols(); ++g) {
            Vector y = (mv.side == Side::Columns) ? Vector(m * mv.vectors.col(g))
                                                  : Vector(m.transpose() * mv.vectors.col(g));
            out.segment(g * dim_, dim_) = y;
        }
        return out;
    }
    const RankOne& r1 = std::get<RankOne>(storage_);
    // ⟨a ⊗ b, vec(M)⟩ = aᵀ M b
    Matrix mb = m * r1.right;
    Vector out(r1.left.cols());
    for (Index t = 0; t < r1.left.cols(); ++t) out(t) = r1.left.col(t).dot(mb.col(t));
    return out;
}

double QueryBatch::gram_deviation() const {
    Matrix g;
    if (is_dense()) {
        const Matrix& r = std::get<Dense>(storage_).rows;
        g = r * r.transpose();
    } else if (is_matvec()) {
        // Rows e_i ⊗ z_g are mutually orthogonal for distinct i; the Gram
        // reduces to the vector Gram of the shared columns.
        const Matrix& z = std::get<Matvec>(storage_).vectors;
        g = z.transpose() * z;
    } else {
        const RankOne& r1 = std::get<RankOne>(storage_);
        g = (r1.left.transpose() * r1.left).cwiseProduct(r1.right.transpose() * r1.right);
    }
    g.diagonal().array() -= 1.0;
    return g.cwiseAbs().maxCoeff();
}

namespace {

using Side = QueryBatch::Side;

// ⟨dense row, e_i ⊗ z⟩ = (R̃ z)(i) for side Columns, (R̃ᵀ z)(i) for Rows.
double cross_dense_matvec(const Matrix& rows, Index dim, Side side, const Matrix& z) {
    double worst = 0.0;
    for (Index r = 0; r < rows.rows(); ++r) {
        Matrix tile = unvec_rowmajor(rows.row(r).transpose(), dim, dim);
        Matrix prod = (side == Side::Columns) ? Matrix(tile * z) : Matrix(tile.transpose() * z);
        worst = std::max(worst, prod.cwiseAbs().maxCoeff());
    }
    return worst;
}

double cross_dense_rank1(const Matrix& rows, Index dim, const Matrix& l, const Matrix& r) {
    double worst = 0.0;
    for (Index row = 0; row < rows.rows(); ++row) {
        Matrix tile = unvec_rowmajor(rows.row(row).transpose(), dim, dim);
        Matrix tr = tile * r;  // dim × k
        for (Index t = 0; t < l.cols(); ++t) worst = std::max(worst, std::abs(l.col(t).dot(tr.col(t))));
    }
    return worst;
}

double cross_matvec_matvec(Side sa, const Matrix& za, Side sb, const Matrix& zb) {
    if (sa == sb) {
        // ⟨e_i ⊗ z, e_j ⊗ z'⟩ = δ_ij ⟨z, z'⟩
        return (za.transpose() * zb).cwiseAbs().maxCoeff();
    }
    // ⟨e_i ⊗ z, w ⊗ e_j⟩ = w(i) z(j)
    return za.cwiseAbs().maxCoeff() * zb.cwiseAbs().maxCoeff();
}

// ⟨a ⊗ b, e_i ⊗ z⟩ = a(i)·⟨b, z⟩ ; mirrored for side Rows.
double cross_rank1_matvec(const Matrix& l, const Matrix& r, Side side, const Matrix& z) {
    double worst = 0.0;
    const Matrix& indexed = (side == Side::Columns) ? l : r;
    const Matrix& dotted = (side == Side::Columns) ? r : l;
    Matrix dots = dotted.transpose() * z;  // k × groups
    for (Index t = 0; t < l.cols(); ++t) {
        double amp = indexed.col(t).cwiseAbs().maxCoeff();
        worst = std::max(worst, amp * dots.row(t).cwiseAbs().maxCoeff());
    }
    return worst;
}

double cross_rank1_rank1(const Matrix& la, const Matrix& ra, const Matrix& lb, const Matrix& rb) {
    return ((la.transpose() * lb).cwiseProduct(ra.transpose() * rb)).cwiseAbs().maxCoeff();
}

}  // namespace

double QueryBatch::max_abs_cross(const QueryBatch& other) const {
    if (dim_ != other.dim_) throw std::invalid_argument("QueryBatch::max_abs_cross: dimension mismatch");
    if (is_dense() && other.is_dense())
        return (std::get<Dense>(storage_).rows * std::get<Dense>(other.storage_).rows.transpose())
            .cwiseAbs()
            .maxCoeff();
    if (is_dense() && other.is_matvec()) {
        const Matvec& mv = std::get<Matvec>(other.storage_);
        return cross_dense_matvec(std::get<Dense>(storage_).rows, dim_, mv.side, mv.vectors);
    }
    if (is_matvec() && other.is_dense()) return other.max_abs_cross(*this);
    if (is_dense() && other.is_rank_one()) {
        const RankOne& r1 = std::get<RankOne>(other.storage_);
        return cross_dense_rank1(std::get<Dense>(storage_).rows, dim_, r1.left, r1.right);
    }
    if (is_rank_one() && other.is_dense()) return other.max_abs_cross(*this);
    if (is_matvec() && other.is_matvec()) {
        const Matvec& a = std::get<Matvec>(storage_);
        const Matvec& b = std::get<Matvec>(other.storage_);
        return cross_matvec_matvec(a.side, a.vectors, b.side, b.vectors);
    }
    if (is_rank_one() && other.is_matvec()) {
        const RankOne& r1 = std::get<RankOne>(storage_);
        const Matvec& mv = std::get<Matvec>(other.storage_);
        return cross_rank1_matvec(r1.left, r1.right, mv.side, mv.vectors);
    }
    if (is_matvec() && other.is_rank_one()) return other.max_abs_cross(*this);
    const RankOne& a = std::get<RankOne>(storage_);
    const RankOne& b = std::get<RankOne>(other.storage_);
    return cross_rank1_rank1(a.left, a.right, b.left, b.right);
}

Matrix QueryBatch::dense_rows() const {
    if (is_dense()) return std::get<Dense>(storage_).rows;
    if (is_matvec()) {
        const Matvec& mv = std::get<Matvec>(storage_);
        Matrix out = Matrix::Zero(row_count(), dim_ * dim_);
        for (Index g = 0; g < mv.vectors.cols(); ++g) {
            for (Index i = 0; i < dim_; ++i) {
                Index row = g * dim_ + i;
                if (mv.side == Side::Columns) {
                    out.row(row).segment(i * dim_, dim_) = mv.vectors.col(g).transpose();
                } else {
                    for (Index j = 0; j < dim_; ++j) out(row, j * dim_ + i) = mv.vectors(j, g);
                }
            }
        }
        return out;
    }
    const RankOne& r1 = std::get<RankOne>(storage_);
    Matrix out(r1.left.cols(), dim_ * dim_);
    for (Index t = 0; t < r1.left.cols(); ++t)
        out.row(t) = vec_rowmajor(r1.left.col(t) * r1.right.col(t).transpose()).transpose();
    return out;
}

}  // namespace matsense
