#include "matsense/harness.hpp"

#include "matsense/algorithms.hpp"
#include "matsense/instances.hpp"
#include "matsense/linalg.hpp"
#include "matsense/oracle.hpp"
#include "matsense/theory.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace matsense {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& value, int line, Parse parse) {
    std::vector<T> out;
    for (const std::string& tok : split_list(value)) {
        try {
            out.push_back(parse(tok));
        } catch (const std::exception&) {
            throw ConfigError(line, "bad value '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError(line, "empty value list");
    return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string raw;
    int line = 0;
    bool saw_m = false, saw_block = false;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key=value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        auto to_int = [](const std::string& t) { return std::stoi(t); };
        auto to_long = [](const std::string& t) { return std::stol(t); };
        auto to_double = [](const std::string& t) { return std::stod(t); };
        auto to_string = [](const std::string& t) { return t; };
        if (key == "n")
            cfg.n = parse_list<int>(value, line, to_int);
        else if (key == "r")
            cfg.r = parse_list<int>(value, line, to_int);
        else if (key == "alpha")
            cfg.alpha = parse_list<double>(value, line, to_double);
        else if (key == "block") {
            cfg.block = parse_list<int>(value, line, to_int);
            saw_block = true;
        } else if (key == "m") {
            cfg.m = parse_list<long>(value, line, to_long);
            saw_m = true;
        } else if (key == "algorithm")
            cfg.algorithm = parse_list<std::string>(value, line, to_string);
        else if (key == "mode")
            cfg.mode = parse_list<std::string>(value, line, to_string);
        else if (key == "sigma")
            cfg.sigma = parse_list<double>(value, line, to_double);
        else if (key == "seeds")
            cfg.seeds = std::stoi(value);
        else if (key == "base_seed")
            cfg.base_seed = std::stoull(value);
        else if (key == "round_budget")
            cfg.round_budget = std::stoi(value);
        else if (key == "success_c")
            cfg.success_c = std::stod(value);
        else if (key == "out")
            cfg.out = value;
        else
            throw ConfigError(line, "unknown key '" + key + "'");
    }
    if (cfg.seeds < 1) throw ConfigError(0, "seeds must be at least 1");
    for (const std::string& a : cfg.algorithm) {
        if (a != "subspace" && a != "krylov" && a != "baseline")
            throw ConfigError(0, "unknown algorithm '" + a + "'");
        if (a == "baseline" && !saw_m) throw ConfigError(0, "baseline sweep needs an m list");
        if (a != "baseline" && !saw_block && cfg.block.empty())
            throw ConfigError(0, "iterative sweep needs a block list");
    }
    for (const std::string& md : cfg.mode)
        if (md != "exact" && md != "noisy") throw ConfigError(0, "unknown mode '" + md + "'");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return parse_config(in);
}

const char* const kReportHeader =
    "# matsense-report v1: seed,n,r,alpha,k,algorithm,rounds_to_success,measurements_total,"
    "final_information,relative_frobenius_error,spectral_predicate,wall_time";

namespace {

struct Cell {
    int n;
    int r;
    double alpha;
    long width;  // block or m
    std::string algorithm;
    Mode mode;
    double sigma;
    size_t cell_index;
};

std::vector<Cell> expand_grid(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    size_t idx = 0;
    for (const std::string& algo : cfg.algorithm) {
        const bool baseline = algo == "baseline";
        std::vector<long> widths;
        if (baseline)
            widths.assign(cfg.m.begin(), cfg.m.end());
        else
            widths.assign(cfg.block.begin(), cfg.block.end());
        for (int n : cfg.n)
            for (int r : cfg.r)
                for (double alpha : cfg.alpha)
                    for (long width : widths)
                        for (const std::string& md : cfg.mode)
                            for (double sigma : cfg.sigma) {
                                Cell c{n,     r,     alpha, width, algo, md == "exact" ? Mode::ExactOnObserved
                                                                                       : Mode::NoisyOnPlant,
                                       sigma, idx++};
                                cells.push_back(c);
                            }
    }
    return cells;
}

void validate_cell(const Cell& c, const ExperimentConfig& cfg) {
    std::ostringstream where;
    where << "grid point " << c.cell_index << " (algorithm=" << c.algorithm << ", n=" << c.n << ", r=" << c.r
          << ", alpha=" << c.alpha << ", width=" << c.width << ")";
    if (c.n < 2 || c.r < 1 || 2 * c.r > c.n) throw std::invalid_argument(where.str() + ": invalid (n, r)");
    if (!(c.alpha >= 0.0)) throw std::invalid_argument(where.str() + ": negative alpha");
    if (c.algorithm == "baseline") {
        if (c.width < 0 || c.width > long(c.n) * c.n)
            throw std::invalid_argument(where.str() + ": m out of range");
    } else {
        if (c.width < c.r || c.width > c.n)
            throw std::invalid_argument(where.str() + ": block out of range");
    }
    if (c.mode == Mode::NoisyOnPlant && !(c.sigma > 0.0))
        throw std::invalid_argument(where.str() + ": noisy mode needs sigma > 0");
    if (cfg.round_budget < 1) throw std::invalid_argument(where.str() + ": round budget must be positive");
}

ReportRow run_cell_trial(const Cell& c, const ExperimentConfig& cfg, int trial) {
    auto t0 = std::chrono::steady_clock::now();
    std::uint64_t seed = mix_seed(cfg.base_seed, c.cell_index, std::uint64_t(trial));
    PlantedInstance inst = gen_planted(c.n, c.r, c.alpha, seed);
    InstanceView view = make_view(inst);

    long k_per_round = c.algorithm == "baseline" ? c.width : 2L * c.n * c.width;
    long budget = std::max<long>(1, k_per_round) * (c.algorithm == "baseline" ? 1 : cfg.round_budget);
    Oracle oracle =
        open(inst, c.mode, c.sigma, c.algorithm == "baseline" ? 1 : cfg.round_budget, budget, mix_seed(seed, 0x901));

    RecoveryResult result;
    if (c.algorithm == "subspace")
        result = subspace_iteration(oracle, int(c.width), cfg.round_budget, c.r, mix_seed(seed, 1));
    else if (c.algorithm == "krylov")
        result = block_krylov(oracle, int(c.width), cfg.round_budget - 1, c.r, mix_seed(seed, 2));
    else
        result = nonadaptive_baseline(oracle, c.width, c.r, mix_seed(seed, 3));
    score_against(result, view);

    // ground-truth metrics joined after the run
    ReportRow row;
    row.seed = seed;
    row.n = c.n;
    row.r = c.r;
    row.alpha = c.alpha;
    row.k = k_per_round;
    row.algorithm = c.algorithm;
    double plant_sq = view.signal.squaredNorm();
    int success_at = -1;
    for (size_t j = 0; j < result.per_round.size(); ++j) {
        const RoundEstimate& est = result.per_round[j];
        double err = (est.left * est.right.transpose() - view.signal).squaredNorm();
        if (plant_sq > 0.0 && err <= cfg.success_c * plant_sq) {
            success_at = int(j) + 1;
            break;
        }
    }
    row.censored = success_at < 0;
    int budget_rounds = c.algorithm == "baseline" ? 1 : cfg.round_budget;
    row.rounds_to_success = row.censored ? budget_rounds : success_at;
    row.measurements_total = result.measurements_used;
    row.final_information = result.info_trace.empty() ? 0.0 : result.info_trace.back();
    row.relative_frobenius_error = result.errors.relative_frobenius;
    Vector sv = singular_values(view.observed);
    double sigma_tail = c.r < sv.size() ? sv(c.r) : 0.0;
    row.spectral_predicate = result.errors.spectral <= 2.0 * sigma_tail ? 1 : 0;
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

void format_row(const ReportRow& row, std::ostream& out) {
    out << row.seed << ',' << row.n << ',' << row.r << ',' << row.alpha << ',' << row.k << ','
        << row.algorithm << ',' << row.rounds_to_success << ',' << row.measurements_total << ','
        << row.final_information << ',' << row.relative_frobenius_error << ',' << row.spectral_predicate
        << ',' << row.wall_time << '\n';
}

}  // namespace

void write_report_rows(const std::vector<ReportRow>& rows, std::ostream& out) {
    out << kReportHeader << '\n';
    for (const ReportRow& r : rows) format_row(r, out);
}

std::vector<ReportRow> run(const ExperimentConfig& cfg, int jobs, std::ostream* csv) {
    std::vector<Cell> cells = expand_grid(cfg);
    for (const Cell& c : cells) validate_cell(c, cfg);

    size_t total = cells.size() * size_t(cfg.seeds);
    std::vector<ReportRow> rows(total);
    std::vector<char> done(total, 0);
    std::atomic<size_t> next{0};
    std::mutex flush_mutex;
    size_t flushed = 0;
    if (csv) *csv << kReportHeader << '\n';

    auto flush_ready = [&]() {
        std::lock_guard<std::mutex> lock(flush_mutex);
        while (flushed < total && done[flushed]) {
            if (csv) format_row(rows[flushed], *csv);
            ++flushed;
        }
        if (csv) csv->flush();
    };

    auto worker = [&]() {
        while (true) {
            size_t task = next.fetch_add(1);
            if (task >= total) break;
            size_t cell_idx = task / size_t(cfg.seeds);
            int trial = int(task % size_t(cfg.seeds));
            rows[task] = run_cell_trial(cells[cell_idx], cfg, trial);
            done[task] = 1;
            flush_ready();
        }
    };

    int hw = int(std::thread::hardware_concurrency());
    int n_threads = std::max(1, jobs > 0 ? jobs : hw);
    n_threads = int(std::min<size_t>(n_threads, total));
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    flush_ready();
    return rows;
}

namespace {

struct CheckResult {
    std::string name;
    long instances = 0;
    bool pass = false;
    std::string detail;
};

void print_check(std::ostream& out, const CheckResult& c) {
    out << (c.pass ? "pass" : "FAIL") << "  " << c.name << "  instances=" << c.instances << "  " << c.detail
        << '\n';
}

CheckResult check_tail_battery() {
    CheckResult c{"tail-exceedance-decay", 10000, false, ""};
    TailEstimate est = tail_probability_mc(64, 64, 4.0, 10000, 0x7a11bead);
    bool nonincreasing = true;
    for (size_t i = 1; i < est.grid_probability.size(); ++i)
        if (est.grid_probability[i] > est.grid_probability[i - 1] + 1e-12) nonincreasing = false;
    c.pass = nonincreasing && est.beta > 0.0 && est.correlation <= -0.95;
    std::ostringstream d;
    d << "beta=" << est.beta << " corr=" << est.correlation << " p[C]=";
    for (size_t i = 0; i < est.grid_c.size(); ++i)
        d << (i ? "," : "") << est.grid_c[i] << ":" << est.grid_probability[i];
    c.detail = d.str();
    return c;
}

CheckResult check_kl_battery() {
    CheckResult c{"kl-conditioning", 1000, false, ""};
    std::mt19937_64 rng(0x6b6c);
    long held = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> size_dist(2, 16);
        int m = size_dist(rng);
        Vector p(m), q(m);
        std::uniform_real_distribution<double> unif(0.01, 1.0);
        for (int i = 0; i < m; ++i) {
            p(i) = unif(rng);
            q(i) = unif(rng);
        }
        p /= p.sum();
        q /= q.sum();
        std::vector<int> event;
        for (int i = 0; i < m; ++i)
            if (rng() % 2 == 0) event.push_back(i);
        if (event.empty()) event.push_back(int(rng() % m));
        if (kl_conditioning_check(p, q, event).holds) ++held;
    }
    c.pass = held == 1000;
    c.detail = "held=" + std::to_string(held) + "/1000";
    return c;
}

CheckResult check_fano_battery() {
    CheckResult c{"fano-bound", 500, false, ""};
    std::mt19937_64 rng(0xfa40);
    long held = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::uniform_int_distribution<int> pd(2, 4), od(2, 6), ad(2, 4);
        int m = pd(rng), outcomes = od(rng), actions = ad(rng);
        FanoCheck fc;
        fc.prior = Vector(m);
        std::uniform_real_distribution<double> unif(0.05, 1.0);
        for (int i = 0; i < m; ++i) fc.prior(i) = unif(rng);
        fc.prior /= fc.prior.sum();
        fc.channels = Matrix(m, outcomes);
        for (int i = 0; i < m; ++i) {
            for (int x = 0; x < outcomes; ++x) fc.channels(i, x) = unif(rng);
            fc.channels.row(i) /= fc.channels.row(i).sum();
        }
        fc.loss = Matrix(m, actions);
        for (int i = 0; i < m; ++i)
            for (int a = 0; a < actions; ++a) fc.loss(i, a) = double(rng() % 2);
        // keep the best constant action strictly below 1
        fc.loss(int(rng() % m), int(rng() % actions)) = 0.0;
        if (fano_bound(fc).holds) ++held;
    }
    c.pass = held == 500;
    c.detail = "held=" + std::to_string(held) + "/500";
    return c;
}

CheckResult check_norm_battery() {
    CheckResult c{"gaussian-norm-facts", 500, false, ""};
    const Index n = 128;
    int spectral_fail = 0, schatten_hold = 0, vector_fail = 0, kyfan_hold = 0;
    for (int s = 0; s < 500; ++s) {
        std::mt19937_64 rng(mix_seed(0x60a5, s));
        Matrix g = gaussian_matrix(n, n, rng);
        Vector sv = singular_values(g);
        if (sv(0) > 3.0 * std::sqrt(double(n))) ++spectral_fail;
        double s4 = 0.0;
        for (Index i = 0; i < sv.size(); ++i) s4 += std::pow(sv(i), 4.0);
        if (std::pow(s4, 0.25) <= 30.0 * std::pow(double(n), 0.75)) ++schatten_hold;
        if (sv.head(4).sum() <= 2.0 * 4.0 * std::sqrt(double(n))) ++kyfan_hold;
        Vector vec = gaussian_vector(n, rng);
        double sq = vec.squaredNorm();
        if (sq < double(n) / 2.0 || sq > 1.5 * double(n)) ++vector_fail;
    }
    c.pass = spectral_fail <= 5 && schatten_hold >= 425 && vector_fail <= 5 && kyfan_hold >= 450;
    std::ostringstream d;
    d << "spectral_fail=" << spectral_fail << "/500 schatten_hold=" << schatten_hold
      << "/500 kyfan_hold=" << kyfan_hold << "/500 vector_fail=" << vector_fail << "/500";
    c.detail = d.str();
    return c;
}

// Fixed 2-round adaptive plan run under both measurement semantics; the
// per-coordinate response laws must match.  Round-2 queries mix two fixed
// orthonormal row sets by an angle read off the first response, staying
// orthonormal and orthogonal to round 1.
CheckResult check_equivalence_battery(int sessions) {
    CheckResult c{"noisy-vs-exact-equivalence", sessions, false, ""};
    const Index n = 32;
    const int k = 3;
    std::uint64_t plant_seed = 0x3f2a;
    std::mt19937_64 plan_rng(0x809);
    Matrix pool = gaussian_matrix(3 * k, n * n, plan_rng);
    Matrix plan = orthonormalize_rows(pool).basis;
    Matrix round1 = plan.topRows(k);
    Matrix pair_a = plan.middleRows(k, k);
    Matrix pair_b = plan.bottomRows(k);

    auto run_sessions = [&](bool exact) {
        std::vector<std::vector<double>> coords(2 * k);
        for (int s = 0; s < sessions; ++s) {
            Vector r1(k), r2(k);
            if (exact) {
                PlantedInstance inst = gen_planted_split(n, 1, 8.0, plant_seed, mix_seed(0xe, s));
                Oracle oracle = open(inst, Mode::ExactOnObserved, 1.0, 2, 2 * k, 1);
                r1 = oracle.measure(QueryBatch::dense(round1, n));
                oracle.end_round();
                double mix = std::atan(r1(0));
                Matrix q2 = std::cos(mix) * pair_a + std::sin(mix) * pair_b;
                r2 = oracle.measure(QueryBatch::dense(q2, n));
                oracle.end_round();
            } else {
                PlantedInstance inst = gen_planted_split(n, 1, 8.0, plant_seed, 0xdead);
                Oracle oracle = open(inst, Mode::NoisyOnPlant, 1.0, 2, 2 * k, mix_seed(0xb, s));
                r1 = oracle.measure(QueryBatch::dense(round1, n));
                oracle.end_round();
                double mix = std::atan(r1(0));
                Matrix q2 = std::cos(mix) * pair_a + std::sin(mix) * pair_b;
                r2 = oracle.measure(QueryBatch::dense(q2, n));
                oracle.end_round();
            }
            for (int c2 = 0; c2 < k; ++c2) coords[c2].push_back(r1(c2));
            for (int c2 = 0; c2 < k; ++c2) coords[k + c2].push_back(r2(c2));
        }
        return coords;
    };

    auto noisy = run_sessions(false);
    auto exact = run_sessions(true);
    double min_p = 1.0;
    for (int c2 = 0; c2 < 2 * k; ++c2) min_p = std::min(min_p, ks_two_sample(noisy[c2], exact[c2]).p_value);
    c.pass = min_p >= 0.01;
    std::ostringstream d;
    d << "min KS p-value over " << 2 * k << " coordinates = " << min_p;
    c.detail = d.str();
    return c;
}

}  // namespace

bool verify(const std::string& suite, std::ostream& report) {
    std::vector<CheckResult> results;
    bool all = suite == "all";
    if (all || suite == "tail") results.push_back(check_tail_battery());
    if (all || suite == "kl") results.push_back(check_kl_battery());
    if (all || suite == "fano") results.push_back(check_fano_battery());
    if (all || suite == "norms") results.push_back(check_norm_battery());
    if (all || suite == "equivalence") results.push_back(check_equivalence_battery(10000));
    if (results.empty()) throw std::invalid_argument("verify: unknown suite '" + suite + "'");
    bool pass = true;
    for (const CheckResult& c : results) {
        print_check(report, c);
        pass = pass && c.pass;
    }
    report << (pass ? "VERIFY PASS" : "VERIFY FAIL") << '\n';
    return pass;
}

namespace {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    t.columns = {"seed",
                 "n",
                 "r",
                 "alpha",
                 "k",
                 "algorithm",
                 "rounds_to_success",
                 "measurements_total",
                 "final_information",
                 "relative_frobenius_error",
                 "spectral_predicate",
                 "wall_time"};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cells.push_back(trim(tok));
        if (cells.size() == t.columns.size()) t.rows.push_back(std::move(cells));
    }
    return t;
}

double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_of(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * double(v.size() - 1);
    size_t lo = size_t(pos);
    size_t hi = std::min(v.size() - 1, lo + 1);
    double frac = pos - double(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

void curve(std::istream& csv, const std::string& x_field, const std::string& y_field,
           const std::string& group_field, std::ostream& out) {
    CsvTable t = read_csv(csv);
    auto col = [&](const std::string& name) {
        auto it = std::find(t.columns.begin(), t.columns.end(), name);
        if (it == t.columns.end()) throw std::invalid_argument("curve: unknown field '" + name + "'");
        return size_t(it - t.columns.begin());
    };
    size_t xi = col(x_field), yi = col(y_field), gi = col(group_field);
    out << "group x " << y_field << "_median " << y_field << "_q25 " << y_field << "_q75\n";
    std::map<std::string, std::map<double, std::vector<double>>> buckets;
    for (const auto& row : t.rows) {
        double x = std::stod(row[xi]);
        double y = std::stod(row[yi]);
        buckets[row[gi]][x].push_back(y);
    }
    for (auto& [group, series] : buckets) {
        for (auto& [x, ys] : series) {
            std::vector<double> copy = ys;
            out << group << ' ' << x << ' ' << median_of(copy) << ' ' << quantile_of(ys, 0.25) << ' '
                << quantile_of(ys, 0.75) << '\n';
        }
    }
}

}  // namespace matsense
