#pragma once

#include "matsense/instances.hpp"
#include "matsense/query.hpp"
#include "matsense/types.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace matsense {

/// Ground-truth data an oracle session needs, assembled from either instance
/// kind.  `signal` is the noise-free part of the observed matrix (plant plus
/// any deterministic structure): it is what noisy sessions measure.
struct InstanceView {
    Index dim = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    Matrix observed;
    Matrix signal;
    // Spike factor pairs embedded at the instance's block position; the
    // projection of each pair's tensor onto the accepted query span is the
    // session's information functional.
    std::vector<std::pair<Vector, Vector>> components;
};

InstanceView make_view(const PlantedInstance& inst);
InstanceView make_view(const DerivedInstance& inst);

struct RoundTranscript {
    int round = 0;
    Index rows = 0;
    Vector responses;
    long measurements_cumulative = 0;
    double information_after = 0.0;  // leading component
};

enum class Mode { NoisyOnPlant, ExactOnObserved };

/// Stateful measurement session.
///
/// Noisy mode answers R·vec(signal) + sigma·z with fresh standard normal z
/// per response and requires every batch orthonormal and orthogonal to all
/// previously accepted rows.  Exact mode answers R·vec(observed)
/// deterministically and allows re-measuring overlapping directions; the
/// session keeps an orthonormal basis of the accepted span, so the cumulative
/// history invariant is maintained on that basis.  Budgets count accepted
/// rows; rejected batches consume nothing.
class Oracle {
public:
    Oracle(InstanceView view, Mode mode, double sigma, int round_budget, long measurement_budget,
           std::uint64_t noise_seed);

    Vector measure(const QueryBatch& batch);
    RoundTranscript end_round();

    /// ‖projection of each spike tensor onto the accepted span‖², one value
    /// per component; reads ground truth, consumes no budget.
    std::vector<double> information_components() const;
    double information() const;  // leading component

    Index dim() const { return view_.dim; }
    double alpha() const { return view_.alpha; }
    Mode mode() const { return mode_; }
    double sigma() const { return sigma_; }
    int round_budget() const { return round_budget_; }
    long measurement_budget() const { return measurement_budget_; }
    long measurements_used() const { return rows_used_; }
    int rounds_sealed() const { return rounds_sealed_; }
    Index rows_in_open_round() const { return rows_this_round_; }
    const std::vector<RoundTranscript>& transcript() const { return transcript_; }

private:
    void absorb(const QueryBatch& batch);
    void absorb_dense_rows(const Matrix& rows);
    void absorb_rank_one(const Matrix& left, const Matrix& right);
    void extend_mode_basis(Matrix& basis, const Matrix& candidates);
    void rescreen_ledger();
    void repurge_dense_span();
    Matrix tensor_project(const Matrix& tile) const;
    double tensor_leak_sq(const Vector& a, const Vector& b) const;

    InstanceView view_;
    Mode mode_;
    double sigma_;
    int round_budget_;
    long measurement_budget_;
    std::mt19937_64 noise_rng_;

    long rows_used_ = 0;
    Index rows_this_round_ = 0;
    int rounds_sealed_ = 0;
    std::vector<Vector> round_responses_;
    std::vector<RoundTranscript> transcript_;

    // Accepted span: (Rⁿ ⊗ span right_modes) + (span left_modes ⊗ Rⁿ), plus a
    // ledger of mutually orthonormal rank-one rows orthogonal to the tensor
    // part, plus an orthonormal dense residual orthogonal to both.
    Matrix right_modes_;   // dim × z
    Matrix left_modes_;    // dim × w
    Matrix ledger_left_;   // dim × t
    Matrix ledger_right_;  // dim × t
    Matrix dense_span_;    // d × dim²
    std::vector<QueryBatch> accepted_;  // raw batches; overlap checks in noisy mode
};

Oracle open(const PlantedInstance& inst, Mode mode, double sigma, int round_budget, long measurement_budget,
            std::uint64_t noise_seed = 0);
Oracle open(const DerivedInstance& inst, Mode mode, double sigma, int round_budget, long measurement_budget,
            std::uint64_t noise_seed = 0);

/// Columns: round, rows, measurements_cumulative, information_after.
void write_transcript_csv(const Oracle& oracle, std::ostream& out);

}  // namespace matsense
