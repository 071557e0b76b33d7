#pragma once

#include "matsense/types.hpp"

#include <variant>

namespace matsense {

/// A batch of general linear measurements, each row a flattened dim×dim query.
///
/// Storage forms:
///   - Dense: explicit k×dim² rows.
///   - Matvec: the structured rows behind matrix-vector products.  For a unit
///     column z, side Columns holds the n rows e_i ⊗ z (responses assemble to
///     A·z); side Rows holds z ⊗ e_i (responses assemble to Aᵀ·z).
///   - RankOne: rows a_t ⊗ b_t for explicit factor pairs (product-basis
///     sketches).
/// Structured forms keep measurement-heavy sessions at O(n) storage per row
/// instead of O(n²).
class QueryBatch {
public:
    enum class Side { Columns, Rows };

    static QueryBatch dense(Matrix rows, Index dim);
    static QueryBatch matvec(Side side, Matrix unit_vectors, Index dim);
    static QueryBatch rank_one(Matrix left, Matrix right, Index dim);

    Index row_count() const;
    Index dim() const { return dim_; }

    /// Noiseless responses ⟨row_i, vec(M)⟩ for a dim×dim matrix M.
    Vector responses_on(const Matrix& m) const;

    /// max |(R·Rᵀ − I)_{ij}| over the batch's own rows.
    double gram_deviation() const;

    /// max |⟨row_i, other_row_j⟩| across two batches.
    double max_abs_cross(const QueryBatch& other) const;

    /// Materialized k×dim² rows; intended for desk-scale use.
    Matrix dense_rows() const;

    bool is_dense() const { return std::holds_alternative<Dense>(storage_); }
    bool is_matvec() const { return std::holds_alternative<Matvec>(storage_); }
    bool is_rank_one() const { return std::holds_alternative<RankOne>(storage_); }
    Side matvec_side() const { return std::get<Matvec>(storage_).side; }
    const Matrix& matvec_vectors() const { return std::get<Matvec>(storage_).vectors; }
    const Matrix& raw_dense() const { return std::get<Dense>(storage_).rows; }
    const Matrix& rank_one_left() const { return std::get<RankOne>(storage_).left; }
    const Matrix& rank_one_right() const { return std::get<RankOne>(storage_).right; }

private:
    struct Dense {
        Matrix rows;  // k × dim²
    };
    struct Matvec {
        Side side;
        Matrix vectors;  // dim × groups, unit columns
    };
    struct RankOne {
        Matrix left;   // dim × k
        Matrix right;  // dim × k
    };

    QueryBatch(std::variant<Dense, Matvec, RankOne> storage, Index dim)
        : storage_(std::move(storage)), dim_(dim) {}

    std::variant<Dense, Matvec, RankOne> storage_;
    Index dim_ = 0;
};

}  // namespace matsense
