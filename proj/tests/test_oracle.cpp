#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matsense/linalg.hpp"
#include "matsense/oracle.hpp"

#include <sstream>

using namespace matsense;

namespace {

Matrix reshape_matvec_columns(const Vector& responses, Index n) {
    Matrix out(n, responses.size() / n);
    for (Index c = 0; c < out.cols(); ++c) out.col(c) = responses.segment(c * n, n);
    return out;
}

}  // namespace

TEST_CASE("complete identity basis reproduces the observed matrix") {
    const Index n = 16;
    PlantedInstance inst = gen_planted(n, 2, 9.0, 404);
    Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 10, n * n);
    Vector y = oracle.measure(QueryBatch::matvec(QueryBatch::Side::Columns, Matrix::Identity(n, n), n));
    Matrix recovered = reshape_matvec_columns(y, n);
    CHECK((recovered - inst.observed()).cwiseAbs().maxCoeff() == 0.0);
    oracle.end_round();
    // complete basis captures the full spike mass
    auto info = oracle.information_components();
    REQUIRE(info.size() == 2);
    for (Index i = 0; i < 2; ++i) {
        double full = inst.spike_left.col(i).squaredNorm() * inst.spike_right.col(i).squaredNorm();
        CHECK(info[i] == doctest::Approx(full).epsilon(1e-9));
    }
}

TEST_CASE("noisy single-entry statistics") {
    const Index n = 8;
    PlantedInstance inst = gen_planted(n, 1, 6.0, 5151);
    double plant_entry = inst.plant()(0, 0);
    Matrix row = Matrix::Zero(1, n * n);
    row(0, 0) = 1.0;
    const int sessions = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < sessions; ++s) {
        Oracle oracle = open(inst, Mode::NoisyOnPlant, 1.0, 1, 1, mix_seed(0xabc, s));
        double y = oracle.measure(QueryBatch::dense(row, n))(0);
        sum += y;
        sum_sq += y * y;
    }
    double mean = sum / sessions;
    double var = sum_sq / sessions - mean * mean;
    CHECK(mean == doctest::Approx(plant_entry).epsilon(0.03 / std::max(1.0, std::abs(plant_entry))));
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("invalid budgets and sigma are rejected") {
    PlantedInstance inst = gen_planted(8, 1, 3.0, 1);
    CHECK_THROWS_AS(open(inst, Mode::ExactOnObserved, 1.0, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(open(inst, Mode::ExactOnObserved, 1.0, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(open(inst, Mode::NoisyOnPlant, 0.0, 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(open(inst, Mode::NoisyOnPlant, -2.0, 4, 4), std::invalid_argument);
}

TEST_CASE("self projection reads the Frobenius norm") {
    const Index n = 12;
    PlantedInstance inst = gen_planted(n, 1, 4.0, 77);
    Matrix m = inst.observed();
    Matrix row = vec_rowmajor(m).transpose() / m.norm();
    Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 1, 1);
    Vector y = oracle.measure(QueryBatch::dense(row, n));
    CHECK(y(0) == doctest::Approx(m.norm()).epsilon(1e-12));
}

TEST_CASE("distinct faults: orthonormality, overlap, budgets, empty round") {
    const Index n = 8;
    PlantedInstance inst = gen_planted(n, 1, 3.0, 9);

    SUBCASE("non-orthonormal batch") {
        Matrix rows = Matrix::Zero(2, n * n);
        rows(0, 0) = 1.0;
        rows(1, 0) = 1e-3;  // breaks orthogonality
        rows(1, 1) = std::sqrt(1.0 - 1e-6);
        Oracle oracle = open(inst, Mode::NoisyOnPlant, 1.0, 2, 8);
        try {
            oracle.measure(QueryBatch::dense(rows, n));
            FAIL("expected a fault");
        } catch (const OracleError& e) {
            CHECK(e.fault() == OracleFault::NonOrthonormalBatch);
        }
        CHECK(oracle.measurements_used() == 0);  // rejected batches consume nothing
    }

    SUBCASE("history overlap in noisy mode") {
        Matrix row = Matrix::Zero(1, n * n);
        row(0, 0) = 1.0;
        Oracle oracle = open(inst, Mode::NoisyOnPlant, 1.0, 2, 8);
        oracle.measure(QueryBatch::dense(row, n));
        Matrix again = Matrix::Zero(1, n * n);
        again(0, 0) = 1e-3;
        again(0, 2) = std::sqrt(1.0 - 1e-6);
        try {
            oracle.measure(QueryBatch::dense(again, n));
            FAIL("expected a fault");
        } catch (const OracleError& e) {
            CHECK(e.fault() == OracleFault::HistoryOverlap);
        }
    }

    SUBCASE("exact mode allows re-measuring the same direction") {
        Matrix row = Matrix::Zero(1, n * n);
        row(0, 5) = 1.0;
        Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 2, 8);
        Vector first = oracle.measure(QueryBatch::dense(row, n));
        Vector second = oracle.measure(QueryBatch::dense(row, n));
        CHECK(first(0) == second(0));
        CHECK(oracle.measurements_used() == 2);
    }

    SUBCASE("measurement budget") {
        Matrix row = Matrix::Zero(1, n * n);
        row(0, 0) = 1.0;
        Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 4, 1);
        oracle.measure(QueryBatch::dense(row, n));
        try {
            oracle.measure(QueryBatch::dense(row, n));
            FAIL("expected a fault");
        } catch (const OracleError& e) {
            CHECK(e.fault() == OracleFault::BudgetExhausted);
        }
    }

    SUBCASE("round budget") {
        Matrix row = Matrix::Zero(1, n * n);
        row(0, 0) = 1.0;
        Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 1, 8);
        oracle.measure(QueryBatch::dense(row, n));
        oracle.end_round();
        try {
            oracle.measure(QueryBatch::dense(row, n));
            FAIL("expected a fault");
        } catch (const OracleError& e) {
            CHECK(e.fault() == OracleFault::BudgetExhausted);
        }
    }

    SUBCASE("empty round") {
        Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 4, 8);
        CHECK_THROWS_AS(oracle.end_round(), OracleError);
        Matrix row = Matrix::Zero(1, n * n);
        row(0, 0) = 1.0;
        oracle.measure(QueryBatch::dense(row, n));
        oracle.end_round();
        CHECK_THROWS_AS(oracle.end_round(), OracleError);
    }
}

TEST_CASE("round transcripts accumulate") {
    const Index n = 8;
    PlantedInstance inst = gen_planted(n, 1, 3.0, 42);
    Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 5, 100);
    std::mt19937_64 rng(6);
    for (int t = 0; t < 3; ++t) {
        Matrix rows = orthonormalize_rows(gaussian_matrix(2, n * n, rng)).basis;
        oracle.measure(QueryBatch::dense(rows, n));
        RoundTranscript tr = oracle.end_round();
        CHECK(tr.round == t + 1);
        CHECK(tr.rows == 2);
        CHECK(tr.responses.size() == 2);
    }
    CHECK(oracle.transcript().size() == 3);
    std::ostringstream csv;
    write_transcript_csv(oracle, csv);
    CHECK(csv.str().rfind("round,rows,measurements_cumulative,information_after", 0) == 0);
    int lines = 0;
    for (char c : csv.str())
        if (c == '\n') ++lines;
    CHECK(lines == 4);
}

TEST_CASE("exact replay is bit-identical") {
    const Index n = 10;
    PlantedInstance inst = gen_planted(n, 1, 5.0, 33);
    std::mt19937_64 rng(8);
    Matrix rows = orthonormalize_rows(gaussian_matrix(4, n * n, rng)).basis;
    Vector first, second;
    for (int pass = 0; pass < 2; ++pass) {
        Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 2, 10);
        Vector y = oracle.measure(QueryBatch::dense(rows, n));
        (pass == 0 ? first : second) = y;
    }
    CHECK(first == second);
}

TEST_CASE("information of a single aligned row") {
    const Index n = 10;
    PlantedInstance inst = gen_planted(n, 1, 5.0, 21);
    Vector u = inst.spike_left.col(0), v = inst.spike_right.col(0);
    Matrix tensor = u * v.transpose();
    Matrix row = vec_rowmajor(tensor).transpose() / tensor.norm();
    Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 1, 1);
    oracle.measure(QueryBatch::dense(row, n));
    CHECK(oracle.information() ==
          doctest::Approx(u.squaredNorm() * v.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("information expectation matches the row count") {
    const Index n = 32;
    const Index k = 64;
    std::mt19937_64 rng(0xe5);
    Matrix q = orthonormalize_rows(gaussian_matrix(k, n * n, rng)).basis;
    QueryBatch batch = QueryBatch::dense(q, n);
    double total = 0.0;
    const int draws = 400;
    for (int s = 0; s < draws; ++s) {
        PlantedInstance inst = gen_planted(n, 1, 1.0, mix_seed(0x1f0, s));
        Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 1, k);
        oracle.measure(batch);
        total += oracle.information();
    }
    CHECK(total / draws == doctest::Approx(double(k)).epsilon(0.05));
}

TEST_CASE("information grows monotonically and stays bounded") {
    const Index n = 12;
    PlantedInstance inst = gen_planted(n, 1, 5.0, 64);
    double cap = inst.spike_left.col(0).squaredNorm() * inst.spike_right.col(0).squaredNorm();
    Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 20, 4000);
    std::mt19937_64 rng(13);
    double prev = 0.0;
    for (int round = 0; round < 6; ++round) {
        Matrix z = orthonormalize_columns(gaussian_matrix(n, 2, rng)).basis;
        oracle.measure(QueryBatch::matvec(round % 2 ? QueryBatch::Side::Rows : QueryBatch::Side::Columns, z, n));
        oracle.end_round();
        double info = oracle.information();
        CHECK(info >= prev - 1e-9);
        CHECK(info <= cap + 1e-6);
        prev = info;
    }
}

TEST_CASE("mixed structured and dense batches keep a consistent span") {
    const Index n = 10;
    PlantedInstance inst = gen_planted(n, 1, 5.0, 3131);
    Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 20, 4000);
    std::mt19937_64 rng(17);
    // dense rows first, then matvec growth that overlaps them
    Matrix rows = orthonormalize_rows(gaussian_matrix(3, n * n, rng)).basis;
    oracle.measure(QueryBatch::dense(rows, n));
    double info_dense = oracle.information();
    Matrix z = orthonormalize_columns(gaussian_matrix(n, 3, rng)).basis;
    oracle.measure(QueryBatch::matvec(QueryBatch::Side::Columns, z, n));
    double info_grown = oracle.information();
    CHECK(info_grown >= info_dense - 1e-9);
    // measuring the full identity basis afterwards saturates the functional
    oracle.measure(QueryBatch::matvec(QueryBatch::Side::Columns, Matrix::Identity(n, n), n));
    double cap = inst.spike_left.col(0).squaredNorm() * inst.spike_right.col(0).squaredNorm();
    CHECK(oracle.information() == doctest::Approx(cap).epsilon(1e-9));
}

TEST_CASE("noise across rounds is uncorrelated") {
    const Index n = 8;
    PlantedInstance inst = gen_planted(n, 1, 0.0, 2);  // alpha 0: responses are pure noise
    Matrix row1 = Matrix::Zero(1, n * n), row2 = Matrix::Zero(1, n * n);
    row1(0, 0) = 1.0;
    row2(0, 3) = 1.0;
    const int sessions = 10000;
    double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
    for (int s = 0; s < sessions; ++s) {
        Oracle oracle = open(inst, Mode::NoisyOnPlant, 1.0, 2, 2, mix_seed(0xc0, s));
        double a = oracle.measure(QueryBatch::dense(row1, n))(0);
        oracle.end_round();
        double b = oracle.measure(QueryBatch::dense(row2, n))(0);
        oracle.end_round();
        s1 += a;
        s2 += b;
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
    }
    double m1 = s1 / sessions, m2 = s2 / sessions;
    double cov = s12 / sessions - m1 * m2;
    double rho = cov / std::sqrt((s11 / sessions - m1 * m1) * (s22 / sessions - m2 * m2));
    CHECK(std::abs(rho) <= 0.05);
}

TEST_CASE("derived instances open as sessions") {
    PlantedInstance base = gen_planted(8, 1, 6.0, 10);
    DerivedInstance sym = symmetrize(base);
    Oracle oracle = open(sym, Mode::ExactOnObserved, 1.0, 4, 1000);
    Index n = sym.dim;
    Vector y = oracle.measure(QueryBatch::matvec(QueryBatch::Side::Columns, Matrix::Identity(n, n), n));
    Matrix recovered = reshape_matvec_columns(y, n);
    CHECK((recovered - sym.observed()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(oracle.information_components().size() == 2);  // both mirrored pairs
}
