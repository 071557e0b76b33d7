#pragma once

#include "matsense/types.hpp"

#include <iosfwd>
#include <optional>

namespace matsense {

/// A spiked Gaussian instance: observed = background + (alpha/√n) · L · Rᵀ
/// with all of background, L, R filled from independent standard normals.
struct PlantedInstance {
    Index dim = 0;
    Index rank = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    Matrix background;   // dim × dim
    Matrix spike_left;   // dim × rank
    Matrix spike_right;  // dim × rank

    double spike_scale() const;
    Matrix plant() const;     // (alpha/√n) · spike_left · spike_rightᵀ
    Matrix observed() const;  // background + plant
};

/// Deterministic per (n, r, alpha, seed): one generator stream fills
/// background row-major, then spike_left, then spike_right.
PlantedInstance gen_planted(Index n, Index r, double alpha, std::uint64_t seed);

/// Same spike factors for a fixed plant_seed, with the background drawn from
/// an independent stream.  Used to redraw noise around a fixed plant.
PlantedInstance gen_planted_split(Index n, Index r, double alpha, std::uint64_t plant_seed,
                                  std::uint64_t background_seed);

Matrix observed(const PlantedInstance& inst);

enum class DerivedKind { Symmetric, DiagAugmented, SparseEmbedded };
enum class DiagVariant { LraRankR, SingularIndexI };

/// A deterministic construction layered on a planted instance.  The base
/// observed matrix occupies the block at (block_row, block_col).
struct DerivedInstance {
    DerivedKind kind = DerivedKind::Symmetric;
    PlantedInstance base;
    DiagVariant diag_variant = DiagVariant::LraRankR;
    Index param = 0;        // rank r, singular index i, or target dimension
    double diag_value = 0;  // DiagAugmented block constant
    Index dim = 0;
    Index block_row = 0;
    Index block_col = 0;

    Matrix observed() const;
    Matrix plant() const;      // base plant embedded at the block position
    Matrix structure() const;  // observed minus plant minus embedded background
};

/// 2n×2n block matrix [[0, M], [Mᵀ, 0]]; every singular value of M appears
/// twice in the result.
DerivedInstance symmetrize(const PlantedInstance& inst);

Matrix symmetrize_matrix(const Matrix& m);

/// The n×n measurement equivalent to measuring a 2n×2n query S against the
/// symmetrized matrix: ⟨S, M′⟩ = ⟨S12 + S21ᵀ, M⟩.
Matrix symmetric_measurement_on_base(const Matrix& s);

/// Block-diagonal augmentation.  LraRankR appends (r−1) diagonal entries of
/// 3√n·alpha; SingularIndexI appends (i−1) entries of 10√n·alpha ahead of the
/// base block, so the base top singular pair becomes the i-th pair.
DerivedInstance augment_diagonal(const PlantedInstance& inst, DiagVariant variant, Index r_or_i,
                                 std::optional<double> diag_override = std::nullopt);

/// Zero-padded embedding of the observed matrix into an n_target×n_target
/// frame, base block top-left; nonzero count stays ≤ n².
DerivedInstance sparse_embed(const PlantedInstance& inst, Index n_target);

/// Binary container: header (format version, n, r, seed, alpha) followed by
/// row-major doubles for background, spike_left, spike_right.  Round-trips
/// bit-exactly.
void dump_instance(const PlantedInstance& inst, std::ostream& out);
PlantedInstance load_instance(std::istream& in);

}  // namespace matsense
