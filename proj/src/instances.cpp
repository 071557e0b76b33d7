#include "matsense/instances.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

namespace matsense {

namespace {

void check_params(Index n, Index r, double alpha) {
    if (n < 2) throw std::invalid_argument("gen_planted: dimension must be at least 2");
    if (r < 1 || 2 * r > n) throw std::invalid_argument("gen_planted: rank must satisfy 1 <= r <= n/2");
    if (!(alpha >= 0.0)) throw std::invalid_argument("gen_planted: alpha must be nonnegative");
}

}  // namespace

double PlantedInstance::spike_scale() const { return alpha / std::sqrt(double(dim)); }

Matrix PlantedInstance::plant() const { return spike_scale() * spike_left * spike_right.transpose(); }

Matrix PlantedInstance::observed() const { return background + plant(); }

PlantedInstance gen_planted(Index n, Index r, double alpha, std::uint64_t seed) {
    check_params(n, r, alpha);
    PlantedInstance inst;
    inst.dim = n;
    inst.rank = r;
    inst.alpha = alpha;
    inst.seed = seed;
    std::mt19937_64 rng(seed);
    inst.background = gaussian_matrix(n, n, rng);
    inst.spike_left = gaussian_matrix(n, r, rng);
    inst.spike_right = gaussian_matrix(n, r, rng);
    return inst;
}

PlantedInstance gen_planted_split(Index n, Index r, double alpha, std::uint64_t plant_seed,
                                  std::uint64_t background_seed) {
    check_params(n, r, alpha);
    PlantedInstance inst;
    inst.dim = n;
    inst.rank = r;
    inst.alpha = alpha;
    inst.seed = plant_seed;
    std::mt19937_64 spike_rng(plant_seed);
    inst.spike_left = gaussian_matrix(n, r, spike_rng);
    inst.spike_right = gaussian_matrix(n, r, spike_rng);
    std::mt19937_64 bg_rng(background_seed);
    inst.background = gaussian_matrix(n, n, bg_rng);
    return inst;
}

Matrix observed(const PlantedInstance& inst) { return inst.observed(); }

Matrix symmetrize_matrix(const Matrix& m) {
    Index n = m.rows();
    Matrix out = Matrix::Zero(2 * n, 2 * n);
    out.block(0, n, n, n) = m;
    out.block(n, 0, n, n) = m.transpose();
    return out;
}

Matrix symmetric_measurement_on_base(const Matrix& s) {
    Index n = s.rows() / 2;
    if (s.rows() != 2 * n || s.cols() != 2 * n) throw std::invalid_argument("symmetric measurement: even square expected");
    return s.block(0, n, n, n) + s.block(n, 0, n, n).transpose();
}

Matrix DerivedInstance::observed() const {
    Index n = base.dim;
    Matrix m = base.observed();
    switch (kind) {
        case DerivedKind::Symmetric:
            return symmetrize_matrix(m);
        case DerivedKind::DiagAugmented: {
            Matrix out = Matrix::Zero(dim, dim);
            out.block(block_row, block_col, n, n) = m;
            Index extra = dim - n;
            if (diag_variant == DiagVariant::LraRankR) {
                for (Index i = 0; i < extra; ++i) out(n + i, n + i) = diag_value;
            } else {
                for (Index i = 0; i < extra; ++i) out(i, i) = diag_value;
            }
            return out;
        }
        case DerivedKind::SparseEmbedded: {
            Matrix out = Matrix::Zero(dim, dim);
            out.block(0, 0, n, n) = m;
            return out;
        }
    }
    throw std::logic_error("DerivedInstance: unknown kind");
}

Matrix DerivedInstance::plant() const {
    Index n = base.dim;
    Matrix p = base.plant();
    Matrix out = Matrix::Zero(dim, dim);
    if (kind == DerivedKind::Symmetric) {
        out.block(0, n, n, n) = p;
        out.block(n, 0, n, n) = p.transpose();
        return out;
    }
    out.block(block_row, block_col, n, n) = p;
    return out;
}

Matrix DerivedInstance::structure() const {
    Index n = base.dim;
    Matrix bg = base.background;
    Matrix out = observed() - plant();
    if (kind == DerivedKind::Symmetric) {
        out.block(0, n, n, n) -= bg;
        out.block(n, 0, n, n) -= bg.transpose();
        return out;
    }
    out.block(block_row, block_col, n, n) -= bg;
    return out;
}

DerivedInstance symmetrize(const PlantedInstance& inst) {
    DerivedInstance d;
    d.kind = DerivedKind::Symmetric;
    d.base = inst;
    d.dim = 2 * inst.dim;
    d.block_row = 0;
    d.block_col = inst.dim;
    return d;
}

DerivedInstance augment_diagonal(const PlantedInstance& inst, DiagVariant variant, Index r_or_i,
                                 std::optional<double> diag_override) {
    if (r_or_i < 1 || r_or_i > inst.dim) throw std::invalid_argument("augment_diagonal: index out of range");
    DerivedInstance d;
    d.kind = DerivedKind::DiagAugmented;
    d.base = inst;
    d.diag_variant = variant;
    d.param = r_or_i;
    Index extra = r_or_i - 1;
    d.dim = inst.dim + extra;
    double root_n = std::sqrt(double(inst.dim));
    d.diag_value = diag_override.value_or(variant == DiagVariant::LraRankR ? 3.0 * root_n * inst.alpha
                                                                           : 10.0 * root_n * inst.alpha);
    if (variant == DiagVariant::LraRankR) {
        d.block_row = 0;
        d.block_col = 0;
    } else {
        d.block_row = extra;
        d.block_col = extra;
    }
    return d;
}

DerivedInstance sparse_embed(const PlantedInstance& inst, Index n_target) {
    if (n_target < inst.dim) throw std::invalid_argument("sparse_embed: target dimension below instance dimension");
    DerivedInstance d;
    d.kind = DerivedKind::SparseEmbedded;
    d.base = inst;
    d.param = n_target;
    d.dim = n_target;
    d.block_row = 0;
    d.block_col = 0;
    return d;
}

namespace {

constexpr char kMagic[8] = {'M', 'S', 'I', 'N', 'S', 'T', '0', '1'};

void write_matrix_rowmajor(std::ostream& out, const Matrix& m) {
    std::vector<double> buf(m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) buf[j] = m(i, j);
        out.write(reinterpret_cast<const char*>(buf.data()), sizeof(double) * buf.size());
    }
}

Matrix read_matrix_rowmajor(std::istream& in, Index rows, Index cols) {
    Matrix m(rows, cols);
    std::vector<double> buf(cols);
    for (Index i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), sizeof(double) * buf.size());
        for (Index j = 0; j < cols; ++j) m(i, j) = buf[j];
    }
    return m;
}

}  // namespace

void dump_instance(const PlantedInstance& inst, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    std::uint32_t version = 1;
    std::int64_t n = inst.dim, r = inst.rank;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&r), sizeof(r));
    out.write(reinterpret_cast<const char*>(&inst.seed), sizeof(inst.seed));
    out.write(reinterpret_cast<const char*>(&inst.alpha), sizeof(inst.alpha));
    write_matrix_rowmajor(out, inst.background);
    write_matrix_rowmajor(out, inst.spike_left);
    write_matrix_rowmajor(out, inst.spike_right);
    if (!out) throw std::runtime_error("dump_instance: write failed");
}

PlantedInstance load_instance(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_instance: bad magic");
    std::uint32_t version = 0;
    std::int64_t n = 0, r = 0;
    PlantedInstance inst;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw std::runtime_error("load_instance: unsupported version");
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&r), sizeof(r));
    in.read(reinterpret_cast<char*>(&inst.seed), sizeof(inst.seed));
    in.read(reinterpret_cast<char*>(&inst.alpha), sizeof(inst.alpha));
    inst.dim = n;
    inst.rank = r;
    inst.background = read_matrix_rowmajor(in, n, n);
    inst.spike_left = read_matrix_rowmajor(in, n, r);
    inst.spike_right = read_matrix_rowmajor(in, n, r);
    if (!in) throw std::runtime_error("load_instance: truncated stream");
    return inst;
}

}  // namespace matsense
