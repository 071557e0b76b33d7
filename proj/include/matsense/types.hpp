#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace matsense {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// splitmix64 step; derives independent stream seeds from (base, cell, trial).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t x = base;
    for (std::uint64_t salt : {a + 0x9e3779b97f4a7c15ull, b + 0xbf58476d1ce4e5b9ull}) {
        x += salt;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        x = x ^ (x >> 31);
    }
    return x;
}

// Row-major fill so that serialized instances are stream-order reproducible.
inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

inline Vector gaussian_vector(Index size, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector v(size);
    for (Index i = 0; i < size; ++i) v(i) = normal(rng);
    return v;
}

// Row-major flattening; vec(u vᵀ) is the Kronecker stack u ⊗ v.
inline Vector vec_rowmajor(const Matrix& m) {
    Vector out(m.size());
    Index pos = 0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) out(pos++) = m(i, j);
    return out;
}

inline Matrix unvec_rowmajor(const Vector& v, Index rows, Index cols) {
    Matrix out(rows, cols);
    Index pos = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) out(i, j) = v(pos++);
    return out;
}

enum class OracleFault {
    NonOrthonormalBatch,
    HistoryOverlap,
    BudgetExhausted,
    EmptyRound,
};

class OracleError : public std::runtime_error {
public:
    OracleError(OracleFault fault, const std::string& what) : std::runtime_error(what), fault_(fault) {}
    OracleFault fault() const { return fault_; }

private:
    OracleFault fault_;
};

}  // namespace matsense
