#include "matsense/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace matsense {

namespace {

Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
    Matrix g = gaussian_matrix(rows, cols, rng);
    return orthonormalize_columns(g).basis;
}

// Measures A·X (side Columns) or Aᵀ·X (side Rows) for orthonormal columns X.
// In noisy mode the requested rows overlap earlier rounds, so the batch is
// re-expressed against the session's accepted rows and the overlapping part
// is reconstructed from earlier responses.
class ProductMeasurer {
public:
    explicit ProductMeasurer(Oracle& oracle) : oracle_(oracle) {}

    Matrix product(const Matrix& x, QueryBatch::Side side) {
        Index n = oracle_.dim();
        QueryBatch batch = QueryBatch::matvec(side, x, n);
        if (oracle_.mode() == Mode::ExactOnObserved) {
            Vector y = oracle_.measure(batch);
            return unflatten(y, n, x.cols());
        }
        // change of basis against history
        Matrix requested = batch.dense_rows();
        OrthoBasis fresh = orthonormalize_rows(requested, history_.rows() > 0 ? &history_ : nullptr);
        Vector got;
        if (fresh.retained > 0) {
            got = oracle_.measure(QueryBatch::dense(fresh.basis, n));
            Index old = history_.rows();
            history_.conservativeResize(old + fresh.retained, n * n);
            history_.bottomRows(fresh.retained) = fresh.basis;
            responses_.conservativeResize(old + fresh.retained);
            responses_.tail(fresh.retained) = got;
        }
        Vector y = requested * history_.transpose() * responses_;
        return unflatten(y, n, x.cols());
    }

private:
    static Matrix unflatten(const Vector& y, Index n, Index cols) {
        Matrix out(n, cols);
        for (Index c = 0; c < cols; ++c) out.col(c) = y.segment(c * n, n);
        return out;
    }

    Oracle& oracle_;
    Matrix history_{0, 0};
    Vector responses_{0};
};

RoundEstimate truncate_in_subspaces(const Matrix& left_basis, const Matrix& core, const Matrix& right_basis,
                                    int target_rank) {
    Index r = std::min<Index>(target_rank, std::min(core.rows(), core.cols()));
    SvdTriple svd = truncated_svd(core, r);
    return RoundEstimate{left_basis * svd.left * svd.values.asDiagonal(), right_basis * svd.right};
}

void finish_result(RecoveryResult& out, Oracle& oracle) {
    out.measurements_used = oracle.measurements_used();
    out.rounds_used = oracle.rounds_sealed();
    if (!out.per_round.empty()) {
        const RoundEstimate& last = out.per_round.back();
        out.estimate = last.left * last.right.transpose();
    } else {
        out.estimate = Matrix::Zero(oracle.dim(), oracle.dim());
    }
}

}  // namespace

RecoveryResult subspace_iteration(Oracle& oracle, int block, int max_rounds, int target_rank,
                                  std::uint64_t seed) {
    Index n = oracle.dim();
    if (target_rank < 1 || block < target_rank)
        throw std::invalid_argument("subspace_iteration: need block >= target_rank >= 1");
    if (block > n) throw std::invalid_argument("subspace_iteration: block exceeds dimension");
    if (max_rounds < 1) throw std::invalid_argument("subspace_iteration: need at least one round");

    std::mt19937_64 rng(mix_seed(seed, 0x1417));  // probe salt shared across algorithms so equal seeds pair trajectories
    Matrix z = random_orthonormal(n, block, rng);
    ProductMeasurer measurer(oracle);
    RecoveryResult out;
    for (int round = 0; round < max_rounds; ++round) {
        Matrix w, c, z_next;
        try {
            Matrix y = measurer.product(z, QueryBatch::Side::Columns);  // A·Z
            w = orthonormalize_columns(y).basis;
            c = measurer.product(w, QueryBatch::Side::Rows);  // Aᵀ·W
            z_next = orthonormalize_columns(c).basis;
        } catch (const OracleError& e) {
            if (e.fault() != OracleFault::BudgetExhausted) throw;
            out.budget_exhausted = true;
            if (oracle.rows_in_open_round() > 0) oracle.end_round();
            break;
        }
        oracle.end_round();
        // best rank-r estimate inside the learned pair of subspaces:
        // Wᵀ·A·Z' = (Aᵀ W)ᵀ · Z'
        Matrix core = c.transpose() * z_next;
        out.per_round.push_back(truncate_in_subspaces(w, core, z_next, target_rank));
        out.info_trace.push_back(oracle.information());
        z = std::move(z_next);
    }
    finish_result(out, oracle);
    return out;
}

RecoveryResult block_krylov(Oracle& oracle, int block, int depth, int target_rank, std::uint64_t seed) {
    Index n = oracle.dim();
    if (target_rank < 1 || block < target_rank)
        throw std::invalid_argument("block_krylov: need block >= target_rank >= 1");
    if (block > n) throw std::invalid_argument("block_krylov: block exceeds dimension");
    if (depth < 0) throw std::invalid_argument("block_krylov: negative depth");

    std::mt19937_64 rng(mix_seed(seed, 0x1417));
    Matrix x = random_orthonormal(n, block, rng);
    ProductMeasurer measurer(oracle);
    Matrix w_all(n, 0);    // accumulated column-space basis
    Matrix atw_all(n, 0);  // Aᵀ applied to the same columns
    RecoveryResult out;
    for (int round = 0; round <= depth; ++round) {
        Matrix w_new, c;
        try {
            Matrix y = measurer.product(x, QueryBatch::Side::Columns);  // A·X
            w_new = orthonormalize_columns(y, w_all.cols() > 0 ? &w_all : nullptr).basis;
            if (w_new.cols() > 0) c = measurer.product(w_new, QueryBatch::Side::Rows);  // Aᵀ·W_new
        } catch (const OracleError& e) {
            if (e.fault() != OracleFault::BudgetExhausted) throw;
            out.budget_exhausted = true;
            if (oracle.rows_in_open_round() > 0) oracle.end_round();
            break;
        }
        oracle.end_round();
        if (w_new.cols() > 0) {
            Index old = w_all.cols();
            w_all.conservativeResize(Eigen::NoChange, old + w_new.cols());
            w_all.rightCols(w_new.cols()) = w_new;
            atw_all.conservativeResize(Eigen::NoChange, old + w_new.cols());
            atw_all.rightCols(w_new.cols()) = c;
            x = orthonormalize_columns(c).basis;
        }
        if (w_all.cols() > 0) {
            // best rank-r approximation within the accumulated column span:
            // [P_W · A]_r = W · [Wᵀ A]_r, and Wᵀ A = (Aᵀ W)ᵀ is fully measured
            Index r = std::min<Index>(target_rank, atw_all.cols());
            SvdTriple svd = truncated_svd(Matrix(atw_all.transpose()), r);
            out.per_round.push_back(
                RoundEstimate{w_all * svd.left * svd.values.asDiagonal(), svd.right});
        }
        out.info_trace.push_back(oracle.information());
    }
    finish_result(out, oracle);
    return out;
}

namespace {

// Seeded product rotation U ⊗ V restricted to a random subset of rows; rows
// are u_p ⊗ v_q, mutually orthonormal.
struct ProductRotation {
    Matrix u, v;
    std::vector<Index> order;  // shuffled pair indices p·n + q
};

ProductRotation make_product_rotation(Index n, std::mt19937_64& rng) {
    ProductRotation rot;
    rot.u = random_orthonormal(n, n, rng);
    rot.v = random_orthonormal(n, n, rng);
    rot.order.resize(size_t(n) * size_t(n));
    std::iota(rot.order.begin(), rot.order.end(), Index(0));
    std::shuffle(rot.order.begin(), rot.order.end(), rng);
    return rot;
}

}  // namespace

RecoveryResult nonadaptive_baseline(Oracle& oracle, long m, int target_rank, std::uint64_t seed) {
    Index n = oracle.dim();
    if (m > n * n) throw std::invalid_argument("nonadaptive_baseline: m exceeds dim^2");
    if (m < 0) throw std::invalid_argument("nonadaptive_baseline: negative m");
    RecoveryResult out;
    if (m == 0) {
        out.estimate = Matrix::Zero(n, n);
        out.per_round.push_back(RoundEstimate{Matrix::Zero(n, 1), Matrix::Zero(n, 1)});
        out.info_trace.push_back(0.0);
        return out;
    }
    std::mt19937_64 rng(mix_seed(seed, 0xba5e));
    ProductRotation rot = make_product_rotation(n, rng);
    Matrix preimage = Matrix::Zero(n, n);
    constexpr long kChunk = 256;
    for (long at = 0; at < m; at += kChunk) {
        long take = std::min(kChunk, m - at);
        Matrix left(n, take), right(n, take);
        for (long t = 0; t < take; ++t) {
            Index pair = rot.order[size_t(at + t)];
            left.col(t) = rot.u.col(pair / n);
            right.col(t) = rot.v.col(pair % n);
        }
        Vector y = oracle.measure(QueryBatch::rank_one(left, right, n));
        preimage += left * y.asDiagonal() * right.transpose();
    }
    oracle.end_round();
    Index r = std::min<Index>(target_rank, n);
    SvdTriple svd = truncated_svd(preimage, r);
    out.per_round.push_back(RoundEstimate{svd.left * svd.values.asDiagonal(), svd.right});
    out.info_trace.push_back(oracle.information());
    finish_result(out, oracle);
    return out;
}

Matrix rank1_extract(Oracle& oracle, const Matrix& projector_basis) {
    Index n = oracle.dim();
    if (projector_basis.rows() != n || projector_basis.cols() < 1)
        throw std::invalid_argument("rank1_extract: basis shape mismatch");
    Matrix gram = projector_basis.transpose() * projector_basis;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument("rank1_extract: basis not orthonormal");
    if (!(oracle.alpha() > 0.0)) throw std::invalid_argument("rank1_extract: needs a positive spike strength");

    ProductMeasurer measurer(oracle);
    Matrix mq = measurer.product(projector_basis, QueryBatch::Side::Columns);  // M·Q
    oracle.end_round();
    Matrix projected = mq * projector_basis.transpose();  // M·Q·Qᵀ
    SvdTriple svd = truncated_svd(projected, 1);
    double rescale = std::sqrt(double(n)) / oracle.alpha();
    return rescale * svd.reconstruct();
}

namespace {

// Dense accumulating Krylov pass; mirrors block_krylov without an oracle.
Matrix dense_rank_r_surrogate(const Matrix& b, int rank, double spectral_target, int max_depth,
                              std::mt19937_64& rng) {
    Index n = b.rows();
    Matrix x = random_orthonormal(n, rank, rng);
    Matrix v_all(n, 0), av_all(n, 0);
    Matrix best = Matrix::Zero(n, n);
    for (int round = 0; round <= max_depth; ++round) {
        Matrix c = b.transpose() * x;
        Matrix v_new = orthonormalize_columns(c, v_all.cols() > 0 ? &v_all : nullptr).basis;
        if (v_new.cols() == 0) break;
        Matrix y = b * v_new;
        Index old = v_all.cols();
        v_all.conservativeResize(Eigen::NoChange, old + v_new.cols());
        v_all.rightCols(v_new.cols()) = v_new;
        av_all.conservativeResize(Eigen::NoChange, old + v_new.cols());
        av_all.rightCols(v_new.cols()) = y;
        Index r = std::min<Index>(rank, av_all.cols());
        SvdTriple svd = truncated_svd(av_all, r);
        best = svd.left * svd.values.asDiagonal() * (v_all * svd.right).transpose();
        if (norm(b - best, NormKind::Spectral) <= spectral_target) break;
        x = orthonormalize_columns(y).basis;
    }
    return best;
}

}  // namespace

RrrResult reduced_rank_regression(const Matrix& a, const Matrix& b, int rank, double opt_hint, double k_rr,
                                  std::uint64_t seed) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw std::invalid_argument("reduced_rank_regression: square same-size matrices expected");
    Index n = a.rows();
    if (rank < 1 || rank > n) throw std::invalid_argument("reduced_rank_regression: rank out of range");

    Vector sa = singular_values(a);
    double sigma_min = sa(sa.size() - 1);
    if (sigma_min <= 1e-12 * sa(0)) throw std::invalid_argument("reduced_rank_regression: singular A");

    std::mt19937_64 rng(mix_seed(seed, 0x4242));
    Vector sb = singular_values(b);
    double tail = rank < n ? sb(rank) : 0.0;
    int max_depth = 2 * int(std::ceil(std::log2(double(std::max<Index>(n, 2))))) + 8;
    Matrix surrogate = dense_rank_r_surrogate(b, rank, 2.0 * tail, max_depth, rng);

    SvdTriple ps = truncated_svd(surrogate, rank);
    Matrix target = ps.left * ps.values.asDiagonal();  // UΣ, n × r
    double surrogate_norm = ps.values(0);
    double eps = surrogate_norm > 0.0
                     ? (opt_hint / surrogate_norm) * (opt_hint / surrogate_norm) / (k_rr * double(rank))
                     : 1e-12;
    eps = std::max(eps, 1e-14);

    // CG on the normal equations, all right-hand sides at once.
    Matrix x = Matrix::Zero(n, rank);
    Matrix resid = target;                    // b − A x
    Matrix g = a.transpose() * resid;         // normal-equation residual
    Matrix dir = g;
    double gg = g.squaredNorm();
    double target_norm = target.norm();
    double stop = std::sqrt(eps) * sigma_min * target_norm;
    int pass = 0;
    const int cap = 4 * int(n) + 200;
    while (std::sqrt(gg) > stop && pass < cap) {
        Matrix ad = a * dir;
        double denom = ad.squaredNorm();
        if (denom == 0.0) break;
        double step = gg / denom;
        x += step * dir;
        resid -= step * ad;
        g = a.transpose() * resid;
        double gg_new = g.squaredNorm();
        dir = g + (gg_new / gg) * dir;
        gg = gg_new;
        ++pass;
    }
    if (std::sqrt(gg) > stop)
        throw std::runtime_error("reduced_rank_regression: solver tolerance not reached within cap");

    RrrResult out;
    out.solution = x;
    out.right_factors = ps.right;
    out.passes = pass;
    out.achieved_spectral = norm(a * x * ps.right.transpose() - b, NormKind::Spectral);
    return out;
}

Criterion Criterion::plant_frobenius(double c) { return Criterion{CriterionKind::PlantFrobenius, c, 0, 0, 1}; }
Criterion Criterion::spectral_lra(double factor, int rank) {
    return Criterion{CriterionKind::SpectralLra, factor, 0, 0, rank};
}
Criterion Criterion::frobenius_lra(double factor, int rank) {
    return Criterion{CriterionKind::FrobeniusLra, factor, 0, 0, rank};
}
Criterion Criterion::schatten_lra(int p, double factor, int rank) {
    return Criterion{CriterionKind::SchattenLra, factor, p, 0, rank};
}
Criterion Criterion::kyfan_lra(int p, double factor, int rank) {
    return Criterion{CriterionKind::KyFanLra, factor, p, 0, rank};
}
Criterion Criterion::singular_pair(int index, double tol) {
    return Criterion{CriterionKind::SingularPair, tol, 0, index, 1};
}

Evaluation evaluate(const RecoveryResult& result, const InstanceView& view, const Criterion& criterion) {
    Evaluation ev;
    const Matrix& est = result.estimate;
    switch (criterion.kind) {
        case CriterionKind::PlantFrobenius: {
            ev.lhs = (est - view.signal).squaredNorm();
            ev.rhs = criterion.factor * view.signal.squaredNorm();
            ev.pass = ev.lhs <= ev.rhs;
            return ev;
        }
        case CriterionKind::SpectralLra:
        case CriterionKind::FrobeniusLra:
        case CriterionKind::SchattenLra:
        case CriterionKind::KyFanLra: {
            Vector sv = singular_values(view.observed);
            Index r = criterion.rank;
            if (criterion.kind == CriterionKind::SpectralLra) {
                ev.lhs = norm(view.observed - est, NormKind::Spectral);
                ev.rhs = criterion.factor * (r < sv.size() ? sv(r) : 0.0);
            } else if (criterion.kind == CriterionKind::FrobeniusLra) {
                ev.lhs = (view.observed - est).squaredNorm();
                double opt = sv.tail(sv.size() - r).squaredNorm();
                ev.rhs = criterion.factor * opt;
            } else {
                NormKind kind =
                    criterion.kind == CriterionKind::SchattenLra ? NormKind::Schatten : NormKind::KyFan;
                ev.lhs = norm(view.observed - est, kind, criterion.p);
                SvdTriple top = truncated_svd(view.observed, r);
                ev.rhs = criterion.factor * norm(view.observed - top.reconstruct(), kind, criterion.p);
            }
            ev.pass = ev.lhs <= ev.rhs;
            return ev;
        }
        case CriterionKind::SingularPair: {
            Eigen::BDCSVD<Matrix> svd(view.observed, Eigen::ComputeThinU | Eigen::ComputeThinV);
            Index i = criterion.index - 1;
            if (i < 0 || i >= svd.singularValues().size())
                throw std::invalid_argument("evaluate: singular index out of range");
            Vector u_true = svd.matrixU().col(i);
            Vector v_true = svd.matrixV().col(i);
            SvdTriple top = truncated_svd(est, 1);
            Vector u_est = top.left.col(0);
            Vector v_est = top.right.col(0);
            ev.align_left = std::abs(u_est.dot(u_true));
            ev.align_right = std::abs(v_est.dot(v_true));
            double plus = std::max((u_est - u_true).norm(), (v_est - v_true).norm());
            double minus = std::max((u_est + u_true).norm(), (v_est + v_true).norm());
            ev.lhs = std::min(plus, minus);
            ev.rhs = criterion.factor;
            ev.pass = ev.lhs <= ev.rhs;
            return ev;
        }
    }
    throw std::logic_error("evaluate: unknown criterion");
}

Evaluation evaluate(const RecoveryResult& result, const PlantedInstance& inst, const Criterion& criterion) {
    return evaluate(result, make_view(inst), criterion);
}

Evaluation evaluate(const RecoveryResult& result, const DerivedInstance& inst, const Criterion& criterion) {
    return evaluate(result, make_view(inst), criterion);
}

void score_against(RecoveryResult& result, const InstanceView& view) {
    double denom = view.signal.squaredNorm();
    result.errors.relative_frobenius =
        denom > 0.0 ? (result.estimate - view.signal).squaredNorm() / denom
                    : (result.estimate.squaredNorm() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    result.errors.spectral = norm(view.observed - result.estimate, NormKind::Spectral);
}

}  // namespace matsense
