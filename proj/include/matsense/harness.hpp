#pragma once

#include "matsense/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace matsense {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what) : std::runtime_error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Flat key=value sweep description; list values are comma-separated.
/// Keys: n, r, alpha, block, m, algorithm (subspace|krylov|baseline),
/// mode (exact|noisy), sigma, seeds, base_seed, round_budget, success_c, out.
struct ExperimentConfig {
    std::vector<int> n = {64};
    std::vector<int> r = {1};
    std::vector<double> alpha = {30.0};
    std::vector<int> block = {1};
    std::vector<long> m = {0};  // baseline row counts; 0 placeholder when unused
    std::vector<std::string> algorithm = {"subspace"};
    std::vector<std::string> mode = {"exact"};
    std::vector<double> sigma = {1.0};
    int seeds = 1;
    std::uint64_t base_seed = 1;
    int round_budget = 25;
    double success_c = 0.01;
    std::string out = "results.csv";
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

struct ReportRow {
    std::uint64_t seed = 0;
    int n = 0;
    int r = 0;
    double alpha = 0.0;
    long k = 0;  // measurements per round
    std::string algorithm;
    int rounds_to_success = 0;  // round budget when censored
    bool censored = false;      // not a CSV column; encoded by the error fields
    long measurements_total = 0;
    double final_information = 0.0;
    double relative_frobenius_error = 0.0;
    int spectral_predicate = 0;
    double wall_time = 0.0;
};

extern const char* const kReportHeader;

/// Executes every (grid point × seed) cell, deterministic per row; rows are
/// written to `csv` in (grid, seed) order as they complete.
std::vector<ReportRow> run(const ExperimentConfig& config, int jobs, std::ostream* csv);

void write_report_rows(const std::vector<ReportRow>& rows, std::ostream& out);

/// Named verification batteries at fixed desk-scale parameters.  Returns
/// overall pass; one report line per check.
bool verify(const std::string& suite, std::ostream& report);

/// Aggregates a run CSV into plot-ready columns: one line per (group, x)
/// carrying the median and quartiles of y.
void curve(std::istream& csv, const std::string& x_field, const std::string& y_field,
           const std::string& group_field, std::ostream& out);

}  // namespace matsense
