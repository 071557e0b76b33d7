#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matsense/harness.hpp"

#include <sstream>

using namespace matsense;

namespace {

std::string strip_wall_time(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            size_t cut = line.rfind(',');
            line = line.substr(0, cut);
        }
        out << line << '\n';
    }
    return out.str();
}

}  // namespace

TEST_CASE("config parser handles lists, comments and defaults") {
    std::stringstream in(
        "# sweep\n"
        "n = 32\n"
        "r = 1\n"
        "alpha = 20, 30\n"
        "block = 1,2\n"
        "algorithm = subspace\n"
        "seeds = 3\n"
        "base_seed = 99\n"
        "round_budget = 10\n"
        "success_c = 0.01\n"
        "out = x.csv\n");
    ExperimentConfig cfg = parse_config(in);
    CHECK(cfg.n == std::vector<int>{32});
    CHECK(cfg.alpha == std::vector<double>{20.0, 30.0});
    CHECK(cfg.block == std::vector<int>{1, 2});
    CHECK(cfg.seeds == 3);
    CHECK(cfg.base_seed == 99);
    CHECK(cfg.out == "x.csv");
}

TEST_CASE("config parser rejects unknown keys with the line number") {
    std::stringstream in("n = 16\nwibble = 3\n");
    try {
        parse_config(in);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("config parser rejects malformed values") {
    std::stringstream in("n = banana\n");
    CHECK_THROWS_AS(parse_config(in), ConfigError);
    std::stringstream in2("algorithm = quantum\n");
    CHECK_THROWS_AS(parse_config(in2), ConfigError);
    std::stringstream in3("mode = telepathic\nalgorithm = subspace\n");
    CHECK_THROWS_AS(parse_config(in3), ConfigError);
}

TEST_CASE("single-point run produces one successful row") {
    std::stringstream cfg_in(
        "n = 32\nr = 1\nalpha = 30\nblock = 1\nalgorithm = subspace\nseeds = 1\n"
        "base_seed = 7\nround_budget = 8\nsuccess_c = 0.01\n");
    ExperimentConfig cfg = parse_config(cfg_in);
    std::ostringstream csv;
    auto rows = run(cfg, 1, &csv);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 32);
    CHECK(rows[0].k == 2 * 32);
    CHECK(!rows[0].censored);
    CHECK(rows[0].rounds_to_success <= 3);
    CHECK(rows[0].measurements_total == 8L * 2 * 32);
    CHECK(rows[0].relative_frobenius_error <= 0.01);
    CHECK(rows[0].spectral_predicate == 1);
    CHECK(csv.str().rfind("# matsense-report v1", 0) == 0);
}

TEST_CASE("grid validation points at the offending cell") {
    std::stringstream cfg_in("n = 8\nr = 1\nalpha = 30\nblock = 16\nalgorithm = subspace\nseeds = 1\n");
    ExperimentConfig cfg = parse_config(cfg_in);
    CHECK_THROWS_AS(run(cfg, 1, nullptr), std::invalid_argument);
}

TEST_CASE("re-running a config reproduces the CSV bytes up to wall time") {
    std::stringstream cfg_in(
        "n = 24\nr = 1\nalpha = 25\nblock = 1,2\nalgorithm = subspace,krylov\nseeds = 2\n"
        "base_seed = 11\nround_budget = 5\nsuccess_c = 0.01\n");
    ExperimentConfig cfg = parse_config(cfg_in);
    std::ostringstream first, second;
    run(cfg, 2, &first);
    run(cfg, 2, &second);
    CHECK(strip_wall_time(first.str()) == strip_wall_time(second.str()));
    CHECK(first.str() != "");
}

TEST_CASE("baseline rows carry m as the per-round measurement count") {
    std::stringstream cfg_in(
        "n = 16\nr = 1\nalpha = 30\nm = 64,256\nalgorithm = baseline\nseeds = 2\nbase_seed = 3\n");
    ExperimentConfig cfg = parse_config(cfg_in);
    auto rows = run(cfg, 1, nullptr);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].k == 64);
    CHECK(rows[2].k == 256);
    // m = n^2 = 256 recovers the observed matrix; its top rank-1 part is close
    // to the plant at alpha = 30
    CHECK(rows[2].relative_frobenius_error <= 0.01);
}

TEST_CASE("curve aggregates medians and quartiles per group") {
    std::stringstream csv;
    csv << kReportHeader << '\n';
    // seed,n,r,alpha,k,algorithm,rts,meas,info,err,pred,wall
    for (int i = 0; i < 5; ++i)
        csv << i << ",32,1,30,64,subspace," << (i + 1) << ",640,100,0.001,1,0.1\n";
    for (int i = 0; i < 5; ++i)
        csv << i << ",32,1,30,128,subspace," << (2 * i + 1) << ",1280,100,0.001,1,0.1\n";
    std::stringstream in(csv.str()), out;
    curve(in, "k", "rounds_to_success", "algorithm", out);
    std::string header;
    std::getline(out, header);
    CHECK(header == "group x rounds_to_success_median rounds_to_success_q25 rounds_to_success_q75");
    std::string l1, l2;
    std::getline(out, l1);
    std::getline(out, l2);
    CHECK(l1 == "subspace 64 3 2 4");
    CHECK(l2 == "subspace 128 5 3 7");
}

TEST_CASE("curve on an empty CSV emits only the header") {
    std::stringstream in(std::string(kReportHeader) + "\n"), out;
    curve(in, "k", "rounds_to_success", "algorithm", out);
    std::string text = out.str();
    CHECK(text == "group x rounds_to_success_median rounds_to_success_q25 rounds_to_success_q75\n");
}

TEST_CASE("curve rejects unknown fields") {
    std::stringstream in(std::string(kReportHeader) + "\n"), out;
    CHECK_THROWS_AS(curve(in, "k", "nonexistent", "algorithm", out), std::invalid_argument);
}

TEST_CASE("verify kl suite passes") {
    std::ostringstream report;
    CHECK(verify("kl", report));
    CHECK(report.str().find("kl-conditioning") != std::string::npos);
    CHECK_THROWS_AS(verify("bogus", report), std::invalid_argument);
}

TEST_CASE("verify fano suite passes") {
    std::ostringstream report;
    CHECK(verify("fano", report));
}

TEST_CASE("end-to-end sweep: monotone medians and curve aggregation") {
    std::stringstream cfg_in(
        "n = 256\nr = 1\nalpha = 30\nblock = 1,2,4,8,16\nalgorithm = subspace\nseeds = 10\n"
        "base_seed = 404\nround_budget = 12\nsuccess_c = 0.01\n");
    ExperimentConfig cfg = parse_config(cfg_in);
    std::stringstream csv;
    auto rows = run(cfg, 2, &csv);
    REQUIRE(rows.size() == 50);
    for (const ReportRow& r : rows) {
        CHECK(!r.censored);
        CHECK(r.relative_frobenius_error <= 0.01);
    }
    std::stringstream in(csv.str()), out;
    curve(in, "k", "rounds_to_success", "algorithm", out);
    std::string header;
    std::getline(out, header);
    std::vector<double> xs, medians;
    std::string group;
    double x, med, q25, q75;
    while (out >> group >> x >> med >> q25 >> q75) {
        xs.push_back(x);
        medians.push_back(med);
        CHECK(q25 <= med);
        CHECK(med <= q75);
    }
    REQUIRE(medians.size() == 5);
    // k ascending: median rounds-to-success never increases with block size
    for (size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] <= medians[i - 1]);
}

TEST_CASE("noisy-mode sweep runs at model-validation scale") {
    std::stringstream cfg_in(
        "n = 24\nr = 1\nalpha = 40\nblock = 1\nalgorithm = subspace\nmode = noisy\nsigma = 1\n"
        "seeds = 2\nbase_seed = 13\nround_budget = 4\nsuccess_c = 0.05\n");
    ExperimentConfig cfg = parse_config(cfg_in);
    auto rows = run(cfg, 1, nullptr);
    REQUIRE(rows.size() == 2);
    for (const ReportRow& r : rows) {
        CHECK(r.measurements_total > 0);
        CHECK(r.measurements_total <= 4L * 2 * 24);
        CHECK(r.final_information > 0.0);
    }
}
