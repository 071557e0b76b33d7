#pragma once

#include "matsense/linalg.hpp"
#include "matsense/oracle.hpp"

#include <limits>
#include <vector>

namespace matsense {

/// Rank-limited snapshot; the estimate is left · rightᵀ.
struct RoundEstimate {
    Matrix left;
    Matrix right;
};

struct ErrorSummary {
    double relative_frobenius = std::numeric_limits<double>::quiet_NaN();  // vs plant, squared ratio
    double spectral = std::numeric_limits<double>::quiet_NaN();            // vs observed
};

struct RecoveryResult {
    Matrix estimate;  // dim × dim, rank ≤ target
    int rounds_used = 0;
    long measurements_used = 0;
    std::vector<double> info_trace;        // leading-component information per round
    std::vector<RoundEstimate> per_round;  // one snapshot per sealed round
    bool budget_exhausted = false;
    ErrorSummary errors;  // filled post-run by score_against
};

/// Alternating block power iteration against the oracle.  Each round measures
/// A·Z then Aᵀ·W (2·n·block rows) and snapshots the best rank-r estimate in
/// the learned subspaces.  Noisy sessions reconstruct overlapping queries
/// from a change of basis against the accepted history.
RecoveryResult subspace_iteration(Oracle& oracle, int block, int max_rounds, int target_rank,
                                  std::uint64_t seed);

/// Accumulating block Krylov iteration: each round extends the column-space
/// basis with an orthogonalized A·X block and measures Aᵀ on it, so the
/// snapshot is the best rank-r approximation within the accumulated span with
/// the row side known exactly.  depth 0 is the one-shot sketch-and-truncate;
/// rounds_used = depth + 1.
RecoveryResult block_krylov(Oracle& oracle, int block, int depth, int target_rank, std::uint64_t seed);

/// Single-round orthonormal sketch: measures m rows of a seeded random
/// rotation (a product-basis rotation U ⊗ V), forms the minimum-norm
/// preimage, truncates to rank r.
RecoveryResult nonadaptive_baseline(Oracle& oracle, long m, int target_rank, std::uint64_t seed);

/// Measures M·Q for an orthonormal n×r basis Q (n·r rows, one round), takes
/// the best rank-1 part of M·Q·Qᵀ and rescales by √n/alpha.
Matrix rank1_extract(Oracle& oracle, const Matrix& projector_basis);

struct RrrResult {
    Matrix solution;       // n × r
    Matrix right_factors;  // n × r, orthonormal columns
    double achieved_spectral = 0.0;  // ‖A·solution·right_factorsᵀ − B‖₂
    int passes = 0;                  // iterative solver passes
};

/// Two-stage reduced-rank regression: a rank-r spectral surrogate of B from
/// dense block Krylov, then an iterative least-squares solve of A·X = UΣ to
/// relative tolerance (opt_hint/‖P'‖)² / (k_rr · r).
RrrResult reduced_rank_regression(const Matrix& a, const Matrix& b, int rank, double opt_hint,
                                  double k_rr = 100.0, std::uint64_t seed = 0x72727265ull);

enum class CriterionKind { PlantFrobenius, SpectralLra, FrobeniusLra, SchattenLra, KyFanLra, SingularPair };

struct Criterion {
    CriterionKind kind;
    double factor = 0.0;
    int p = 0;
    int index = 0;
    int rank = 1;

    static Criterion plant_frobenius(double c);
    static Criterion spectral_lra(double factor, int rank);
    static Criterion frobenius_lra(double factor, int rank);
    static Criterion schatten_lra(int p, double factor, int rank);
    static Criterion kyfan_lra(int p, double factor, int rank);
    static Criterion singular_pair(int index, double tol);
};

struct Evaluation {
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double align_left = std::numeric_limits<double>::quiet_NaN();
    double align_right = std::numeric_limits<double>::quiet_NaN();
};

/// Evaluates the predicate against ground truth (full decomposition of the
/// observed matrix).
Evaluation evaluate(const RecoveryResult& result, const InstanceView& view, const Criterion& criterion);
Evaluation evaluate(const RecoveryResult& result, const PlantedInstance& inst, const Criterion& criterion);
Evaluation evaluate(const RecoveryResult& result, const DerivedInstance& inst, const Criterion& criterion);

/// Fills result.errors from ground truth.
void score_against(RecoveryResult& result, const InstanceView& view);

}  // namespace matsense
