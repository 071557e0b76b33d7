#include "matsense/oracle.hpp"

#include "matsense/linalg.hpp"

#include <cmath>
#include <ostream>

namespace matsense {

namespace {

constexpr double kBatchTol = 1e-8;
constexpr double kSpanTol = 1e-9;

}  // namespace

InstanceView make_view(const PlantedInstance& inst) {
    InstanceView v;
    v.dim = inst.dim;
    v.alpha = inst.alpha;
    v.seed = inst.seed;
    v.observed = inst.observed();
    v.signal = inst.plant();
    for (Index i = 0; i < inst.rank; ++i)
        v.components.emplace_back(inst.spike_left.col(i), inst.spike_right.col(i));
    return v;
}

InstanceView make_view(const DerivedInstance& inst) {
    InstanceView v;
    v.dim = inst.dim;
    v.alpha = inst.base.alpha;
    v.seed = inst.base.seed;
    v.observed = inst.observed();
    v.signal = v.observed;
    Index n = inst.base.dim;
    // noise-free part: strip the embedded background
    if (inst.kind == DerivedKind::Symmetric) {
        v.signal.block(0, n, n, n) -= inst.base.background;
        v.signal.block(n, 0, n, n) -= inst.base.background.transpose();
    } else {
        v.signal.block(inst.block_row, inst.block_col, n, n) -= inst.base.background;
    }
    for (Index i = 0; i < inst.base.rank; ++i) {
        if (inst.kind == DerivedKind::Symmetric) {
            Vector u = Vector::Zero(inst.dim), w = Vector::Zero(inst.dim);
            u.segment(0, n) = inst.base.spike_left.col(i);
            w.segment(n, n) = inst.base.spike_right.col(i);
            v.components.emplace_back(u, w);
            Vector u2 = Vector::Zero(inst.dim), w2 = Vector::Zero(inst.dim);
            u2.segment(n, n) = inst.base.spike_right.col(i);
            w2.segment(0, n) = inst.base.spike_left.col(i);
            v.components.emplace_back(u2, w2);
        } else {
            Vector u = Vector::Zero(inst.dim), w = Vector::Zero(inst.dim);
            u.segment(inst.block_row, n) = inst.base.spike_left.col(i);
            w.segment(inst.block_col, n) = inst.base.spike_right.col(i);
            v.components.emplace_back(u, w);
        }
    }
    return v;
}

Oracle::Oracle(InstanceView view, Mode mode, double sigma, int round_budget, long measurement_budget,
               std::uint64_t noise_seed)
    : view_(std::move(view)),
      mode_(mode),
      sigma_(sigma),
      round_budget_(round_budget),
      measurement_budget_(measurement_budget),
      noise_rng_(mix_seed(noise_seed ? noise_seed : view_.seed, 0x6f7261636cull)) {
    if (mode_ == Mode::NoisyOnPlant && !(sigma_ > 0.0))
        throw std::invalid_argument("Oracle: noisy mode needs sigma > 0");
    if (round_budget_ < 1 || measurement_budget_ < 1)
        throw std::invalid_argument("Oracle: budgets must be at least 1");
    right_modes_ = Matrix(view_.dim, 0);
    left_modes_ = Matrix(view_.dim, 0);
    ledger_left_ = Matrix(view_.dim, 0);
    ledger_right_ = Matrix(view_.dim, 0);
    dense_span_ = Matrix(0, view_.dim * view_.dim);
}

Vector Oracle::measure(const QueryBatch& batch) {
    Index k = batch.row_count();
    if (k == 0) throw std::invalid_argument("Oracle::measure: empty batch");
    if (batch.dim() != view_.dim) throw std::invalid_argument("Oracle::measure: dimension mismatch");

    if (rounds_sealed_ >= round_budget_)
        throw OracleError(OracleFault::BudgetExhausted, "round budget exhausted");
    if (rows_used_ + k > measurement_budget_)
        throw OracleError(OracleFault::BudgetExhausted, "measurement budget exhausted");
    if (batch.gram_deviation() > kBatchTol)
        throw OracleError(OracleFault::NonOrthonormalBatch, "batch rows not orthonormal");
    if (mode_ == Mode::NoisyOnPlant) {
        for (const QueryBatch& prior : accepted_) {
            if (batch.max_abs_cross(prior) > kBatchTol)
                throw OracleError(OracleFault::HistoryOverlap, "batch overlaps accepted history");
        }
    }

    Vector y = batch.responses_on(mode_ == Mode::ExactOnObserved ? view_.observed : view_.signal);
    if (mode_ == Mode::NoisyOnPlant) {
        std::normal_distribution<double> normal;
        for (Index i = 0; i < k; ++i) y(i) += sigma_ * normal(noise_rng_);
    }

    absorb(batch);
    if (mode_ == Mode::NoisyOnPlant) accepted_.push_back(batch);
    rows_used_ += k;
    rows_this_round_ += k;
    round_responses_.push_back(y);
    return y;
}

RoundTranscript Oracle::end_round() {
    if (rows_this_round_ == 0)
        throw OracleError(OracleFault::EmptyRound, "end_round without measurements");
    RoundTranscript t;
    t.round = ++rounds_sealed_;
    t.rows = rows_this_round_;
    Index total = 0;
    for (const Vector& r : round_responses_) total += r.size();
    t.responses.resize(total);
    Index at = 0;
    for (const Vector& r : round_responses_) {
        t.responses.segment(at, r.size()) = r;
        at += r.size();
    }
    t.measurements_cumulative = rows_used_;
    t.information_after = information();
    transcript_.push_back(t);
    rows_this_round_ = 0;
    round_responses_.clear();
    return t;
}

Matrix Oracle::tensor_project(const Matrix& tile) const {
    Matrix acc = Matrix::Zero(tile.rows(), tile.cols());
    if (right_modes_.cols() > 0) acc += (tile * right_modes_) * right_modes_.transpose();
    if (left_modes_.cols() > 0) {
        Matrix lt = left_modes_ * (left_modes_.transpose() * tile);
        acc += lt;
        if (right_modes_.cols() > 0) acc -= (lt * right_modes_) * right_modes_.transpose();
    }
    return acc;
}

double Oracle::tensor_leak_sq(const Vector& a, const Vector& b) const {
    double pb = right_modes_.cols() > 0 ? (right_modes_.transpose() * b).squaredNorm() : 0.0;
    double pa = left_modes_.cols() > 0 ? (left_modes_.transpose() * a).squaredNorm() : 0.0;
    return a.squaredNorm() * pb + pa * b.squaredNorm() - pa * pb;
}

void Oracle::extend_mode_basis(Matrix& basis, const Matrix& candidates) {
    OrthoBasis got = orthonormalize_columns(candidates, basis.cols() > 0 ? &basis : nullptr, kSpanTol);
    if (got.retained == 0) return;
    Matrix merged(basis.rows(), basis.cols() + got.retained);
    merged << basis, got.basis;
    basis = std::move(merged);
    rescreen_ledger();
    repurge_dense_span();
}

void Oracle::rescreen_ledger() {
    if (ledger_left_.cols() == 0) return;
    Matrix keep_l(view_.dim, ledger_left_.cols()), keep_r(view_.dim, ledger_left_.cols());
    Index kept = 0;
    std::vector<std::pair<Vector, Vector>> demoted;
    for (Index t = 0; t < ledger_left_.cols(); ++t) {
        if (tensor_leak_sq(ledger_left_.col(t), ledger_right_.col(t)) > kBatchTol * kBatchTol) {
            demoted.emplace_back(ledger_left_.col(t), ledger_right_.col(t));
        } else {
            keep_l.col(kept) = ledger_left_.col(t);
            keep_r.col(kept) = ledger_right_.col(t);
            ++kept;
        }
    }
    if (demoted.empty()) return;
    ledger_left_ = keep_l.leftCols(kept);
    ledger_right_ = keep_r.leftCols(kept);
    Matrix rows(demoted.size(), view_.dim * view_.dim);
    for (size_t i = 0; i < demoted.size(); ++i)
        rows.row(i) = vec_rowmajor(demoted[i].first * demoted[i].second.transpose()).transpose();
    absorb_dense_rows(rows);
}

void Oracle::repurge_dense_span() {
    if (dense_span_.rows() == 0) return;
    Index n = view_.dim;
    Matrix rows = std::move(dense_span_);
    dense_span_ = Matrix(0, n * n);
    Matrix survivors(rows.rows(), n * n);
    Index kept = 0;
    for (Index r = 0; r < rows.rows(); ++r) {
        Matrix tile = unvec_rowmajor(rows.row(r).transpose(), n, n);
        tile -= tensor_project(tile);
        Vector flat = vec_rowmajor(tile);
        for (int pass = 0; pass < 2; ++pass) {
            if (kept > 0) {
                auto basis = survivors.topRows(kept);
                flat -= basis.transpose() * (basis * flat);
            }
        }
        double nrm = flat.norm();
        if (nrm > kSpanTol) survivors.row(kept++) = flat.transpose() / nrm;
    }
    dense_span_ = survivors.topRows(kept);
}

void Oracle::absorb_dense_rows(const Matrix& rows) {
    Index n = view_.dim;
    bool virgin = right_modes_.cols() == 0 && left_modes_.cols() == 0 && ledger_left_.cols() == 0 &&
                  dense_span_.rows() == 0;
    if (virgin) {
        // batch already validated orthonormal; adopt as the span basis
        dense_span_ = rows;
        return;
    }
    for (Index r = 0; r < rows.rows(); ++r) {
        Vector flat = rows.row(r).transpose();
        for (int pass = 0; pass < 2; ++pass) {
            Matrix t = unvec_rowmajor(flat, n, n);
            t -= tensor_project(t);
            if (ledger_left_.cols() > 0) {
                for (Index j = 0; j < ledger_left_.cols(); ++j) {
                    double dot = ledger_left_.col(j).dot(t * ledger_right_.col(j));
                    t -= dot * ledger_left_.col(j) * ledger_right_.col(j).transpose();
                }
            }
            flat = vec_rowmajor(t);
            if (dense_span_.rows() > 0) flat -= dense_span_.transpose() * (dense_span_ * flat);
        }
        double nrm = flat.norm();
        if (nrm > kSpanTol) {
            dense_span_.conservativeResize(dense_span_.rows() + 1, Eigen::NoChange);
            dense_span_.row(dense_span_.rows() - 1) = flat.transpose() / nrm;
        }
    }
}

void Oracle::absorb_rank_one(const Matrix& left, const Matrix& right) {
    Index k = left.cols();
    // Rows that stay orthogonal to everything already tracked go to the
    // ledger; the rest fall back to the dense span.
    Eigen::ArrayXd leak = Eigen::ArrayXd::Zero(k);
    for (Index t = 0; t < k; ++t) leak(t) = tensor_leak_sq(left.col(t), right.col(t));
    Eigen::ArrayXd cross = Eigen::ArrayXd::Zero(k);
    if (ledger_left_.cols() > 0) {
        Matrix g = (ledger_left_.transpose() * left).cwiseProduct(ledger_right_.transpose() * right);
        cross = g.cwiseAbs().colwise().maxCoeff().transpose().array();
    }
    Eigen::ArrayXd dense_hit = Eigen::ArrayXd::Zero(k);
    if (dense_span_.rows() > 0) {
        Index n = view_.dim;
        for (Index r = 0; r < dense_span_.rows(); ++r) {
            Matrix tile = unvec_rowmajor(dense_span_.row(r).transpose(), n, n);
            Matrix tr = tile * right;
            for (Index t = 0; t < k; ++t)
                dense_hit(t) = std::max(dense_hit(t), std::abs(left.col(t).dot(tr.col(t))));
        }
    }
    std::vector<Index> clean, fallback;
    for (Index t = 0; t < k; ++t) {
        bool ok = leak(t) <= kBatchTol * kBatchTol && cross(t) <= kBatchTol && dense_hit(t) <= kBatchTol;
        (ok ? clean : fallback).push_back(t);
    }
    // Within-batch orthonormality was already validated, so clean rows can be
    // adopted together.
    if (!clean.empty()) {
        Index base = ledger_left_.cols();
        ledger_left_.conservativeResize(Eigen::NoChange, base + Index(clean.size()));
        ledger_right_.conservativeResize(Eigen::NoChange, base + Index(clean.size()));
        for (size_t i = 0; i < clean.size(); ++i) {
            ledger_left_.col(base + Index(i)) = left.col(clean[i]);
            ledger_right_.col(base + Index(i)) = right.col(clean[i]);
        }
    }
    if (!fallback.empty()) {
        Matrix rows(fallback.size(), view_.dim * view_.dim);
        for (size_t i = 0; i < fallback.size(); ++i)
            rows.row(i) =
                vec_rowmajor(left.col(fallback[i]) * right.col(fallback[i]).transpose()).transpose();
        absorb_dense_rows(rows);
    }
}

void Oracle::absorb(const QueryBatch& batch) {
    if (batch.is_matvec()) {
        if (batch.matvec_side() == QueryBatch::Side::Columns)
            extend_mode_basis(right_modes_, batch.matvec_vectors());
        else
            extend_mode_basis(left_modes_, batch.matvec_vectors());
        return;
    }
    if (batch.is_rank_one()) {
        absorb_rank_one(batch.rank_one_left(), batch.rank_one_right());
        return;
    }
    absorb_dense_rows(batch.raw_dense());
}

std::vector<double> Oracle::information_components() const {
    std::vector<double> out;
    out.reserve(view_.components.size());
    Index n = view_.dim;
    for (const auto& [u, v] : view_.components) {
        double total = tensor_leak_sq(u, v);
        if (ledger_left_.cols() > 0) {
            Vector du = ledger_left_.transpose() * u;
            Vector dv = ledger_right_.transpose() * v;
            total += du.cwiseProduct(dv).squaredNorm();
        }
        for (Index r = 0; r < dense_span_.rows(); ++r) {
            Matrix tile = unvec_rowmajor(dense_span_.row(r).transpose(), n, n);
            double dot = u.dot(tile * v);
            total += dot * dot;
        }
        out.push_back(total);
    }
    return out;
}

double Oracle::information() const {
    auto comps = information_components();
    return comps.empty() ? 0.0 : comps.front();
}

Oracle open(const PlantedInstance& inst, Mode mode, double sigma, int round_budget, long measurement_budget,
            std::uint64_t noise_seed) {
    return Oracle(make_view(inst), mode, sigma, round_budget, measurement_budget, noise_seed);
}

Oracle open(const DerivedInstance& inst, Mode mode, double sigma, int round_budget, long measurement_budget,
            std::uint64_t noise_seed) {
    return Oracle(make_view(inst), mode, sigma, round_budget, measurement_budget, noise_seed);
}

void write_transcript_csv(const Oracle& oracle, std::ostream& out) {
    out << "round,rows,measurements_cumulative,information_after\n";
    for (const RoundTranscript& t : oracle.transcript()) {
        out << t.round << ',' << t.rows << ',' << t.measurements_cumulative << ',' << t.information_after
            << '\n';
    }
}

}  // namespace matsense
