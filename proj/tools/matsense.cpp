// matsense: adaptive matrix sensing simulation harness.
//   gen     dump a planted instance container
//   run     execute an experiment sweep, emit report CSV
//   verify  run the verification batteries
//   curve   aggregate a report CSV into plot-ready columns

#include <CLI11.hpp>

#include "matsense/harness.hpp"
#include "matsense/instances.hpp"

#include <fstream>
#include <iostream>

namespace {

int do_gen(const std::string& config_path, const std::string& out_path, std::uint64_t seed_override,
           bool have_seed) {
    matsense::ExperimentConfig cfg = matsense::parse_config_file(config_path);
    if (cfg.n.size() != 1 || cfg.r.size() != 1 || cfg.alpha.size() != 1) {
        std::cerr << "gen: config must pin single n, r, alpha values\n";
        return 2;
    }
    std::uint64_t seed = have_seed ? seed_override : cfg.base_seed;
    matsense::PlantedInstance inst = matsense::gen_planted(cfg.n[0], cfg.r[0], cfg.alpha[0], seed);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "gen: cannot open " << out_path << "\n";
        return 1;
    }
    matsense::dump_instance(inst, out);
    std::cout << "wrote instance n=" << inst.dim << " r=" << inst.rank << " alpha=" << inst.alpha
              << " seed=" << inst.seed << " to " << out_path << "\n";
    return 0;
}

int do_run(const std::string& config_path, const std::string& out_override, std::uint64_t seed_override,
           bool have_seed, int jobs) {
    matsense::ExperimentConfig cfg = matsense::parse_config_file(config_path);
    if (have_seed) cfg.base_seed = seed_override;
    std::string out_path = out_override.empty() ? cfg.out : out_override;
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "run: cannot open " << out_path << "\n";
        return 1;
    }
    auto rows = matsense::run(cfg, jobs, &out);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive matrix sensing simulation harness"};
    app.require_subcommand(1);

    std::string config_path, out_path, suite = "all";
    std::string x_field, y_field, group_field = "algorithm";
    std::uint64_t seed = 0;
    int jobs = 0;

    CLI::App* gen = app.add_subcommand("gen", "dump a planted instance");
    gen->add_option("--config", config_path, "config with n, r, alpha (single values)")->required();
    gen->add_option("--out", out_path, "output container path")->required();
    CLI::Option* gen_seed = gen->add_option("--seed", seed, "instance seed");

    CLI::App* runcmd = app.add_subcommand("run", "execute an experiment sweep");
    runcmd->add_option("--config", config_path, "sweep config")->required();
    runcmd->add_option("--out", out_path, "report CSV path (overrides config)");
    CLI::Option* run_seed = runcmd->add_option("--seed", seed, "base seed (overrides config)");
    runcmd->add_option("--jobs", jobs, "worker threads (default: hardware)");

    CLI::App* verify = app.add_subcommand("verify", "run verification batteries");
    verify->add_option("--suite", suite, "tail|kl|fano|norms|equivalence|all");
    verify->add_option("--out", out_path, "write report to file instead of stdout");

    CLI::App* curvecmd = app.add_subcommand("curve", "aggregate a report CSV");
    curvecmd->add_option("--config", config_path, "input report CSV")->required();
    curvecmd->add_option("--out", out_path, "plot-data output path")->required();
    curvecmd->add_option("--x", x_field, "x field")->required();
    curvecmd->add_option("--y", y_field, "y field")->required();
    curvecmd->add_option("--group-by", group_field, "grouping field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return do_gen(config_path, out_path, seed, !gen_seed->empty());
        if (runcmd->parsed()) return do_run(config_path, out_path, seed, !run_seed->empty(), jobs);
        if (verify->parsed()) {
            bool ok;
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                if (!out) {
                    std::cerr << "verify: cannot open " << out_path << "\n";
                    return 1;
                }
                ok = matsense::verify(suite, out);
            } else {
                ok = matsense::verify(suite, std::cout);
            }
            return ok ? 0 : 1;
        }
        if (curvecmd->parsed()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "curve: cannot open " << config_path << "\n";
                return 1;
            }
            std::ofstream out(out_path);
            if (!out) {
                std::cerr << "curve: cannot open " << out_path << "\n";
                return 1;
            }
            matsense::curve(in, x_field, y_field, group_field, out);
            return 0;
        }
    } catch (const matsense::ConfigError& e) {
        std::cerr << "config error (line " << e.line() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
