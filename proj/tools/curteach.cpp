#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curteach/env/grid_dataset.hpp"
#include "curteach/harness/config.hpp"
#include "curteach/harness/plots.hpp"
#include "curteach/harness/runner.hpp"
#include "curteach/theory/suite.hpp"

namespace fs = std::filesystem;
using namespace curteach;
using namespace curteach::harness;

namespace {

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Usage: return 2;
        case ErrorCategory::Config: return 3;
        case ErrorCategory::Io: return 4;
        case ErrorCategory::Validation: return 5;
        case ErrorCategory::Numerical: return 6;
        case ErrorCategory::Generation: return 7;
    }
    return 1;
}

int cmd_gen_dataset(const std::string& kind_name, std::uint64_t seed, const std::string& out,
                    const std::vector<std::size_t>& per_group, std::size_t threads) {
    const auto kind = grid::parse_kind(kind_name);
    auto cfg = kind == grid::Kind::Tsp ? grid::DatasetConfig::tsp_defaults(seed)
                                       : grid::DatasetConfig::shortest_path_defaults(seed);
    if (!per_group.empty()) {
        if (per_group.size() != 3) throw Error(ErrorCategory::Usage, "--per-group takes three counts: train val test");
        for (std::size_t i = 0; i < 3; ++i) cfg.per_group[i] = per_group[i];
    }
    cfg.threads = threads;
    const fs::path dir = out.empty() ? fs::path("data") / kind_name : fs::path(out);
    const auto ds = grid::generate_dataset(cfg);
    grid::write_dataset(ds, dir);
    write_text(dir / "VERSION", std::string(kVersion) + "\n");
    std::cout << kind_name << " dataset in " << dir.string() << ": ";
    for (std::size_t i = 0; i < 3; ++i) std::cout << (i ? "/" : "") << ds.splits[i].size();
    std::cout << " tasks (train/val/test)\n";
    return 0;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out, bool plots) {
    auto cfg = load_config(config);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    const fs::path dir = cfg.output_dir;
    const auto res = run_experiment(cfg, dir);
    if (plots) emit_plots(res.runs, dir / "plots");
    std::cout << mode_name(cfg.mode) << " run finished: " << res.runs.size() << " strategies x " << cfg.seeds
              << " seeds, logs in " << dir.string() << "\n";
    for (const auto& r : res.runs) {
        double final_mean = 0.0;
        for (const auto& log : r.logs) final_mean += log.rows.back().value;
        final_mean /= static_cast<double>(r.logs.size());
        std::cout << "  " << strategy_name(r.strategy) << ": final mean value " << format_double(final_mean);
        if (!res.teacher_values.empty()) {
            std::cout << ", mean demos to 95% " << format_double(mean_demos_to_fraction(res, r.strategy, cfg.demos_per_state));
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_validate_theory(std::uint64_t seed, const std::string& out) {
    std::vector<theory::CheckResult> results = {theory::gibbs_suite(seed),       theory::identity_suite(seed),
                                                theory::firstorder_suite(seed),  theory::gradient_suite(seed),
                                                theory::monotonicity_suite(seed), theory::convergence_suite(seed)};
    std::ostringstream report, meta;
    report << "# curteach theory report seed=" << seed << "\n";
    meta << "[timing]\n";
    bool all = true;
    for (const auto& r : results) {
        report << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        meta << r.name << " = " << format_double(r.seconds) << "\n";
        all = all && r.pass;
    }
    if (out.empty()) {
        std::cout << report.str();
        std::cerr << meta.str();
    } else {
        fs::create_directories(out);
        write_text(fs::path(out) / "report.txt", report.str());
        write_text(fs::path(out) / "meta.ini", "[run]\nfinished_utc = " + utc_timestamp() + "\n\n" + meta.str());
        write_text(fs::path(out) / "VERSION", std::string(kVersion) + "\n");
        std::cout << report.str();
    }
    return all ? 0 : exit_code(ErrorCategory::Validation);
}

int cmd_plot(const std::string& in, const std::string& out) {
    const auto runs = load_runs(in);
    const fs::path dir = out.empty() ? fs::path(in) / "plots" : fs::path(out);
    for (const auto& p : emit_plots(runs, dir)) std::cout << p.string() << "\n";
    return 0;
}

void inspect_log(const ExperimentLog& log) {
    std::cout << "log: " << log.kind << " " << log.strategy << " seed=" << log.seed << ", " << log.rows.size()
              << " rows\n  columns:";
    for (const char* c : ExperimentLog::kCoreColumns) std::cout << " " << c;
    for (const auto& c : log.extra_columns) std::cout << " " << c;
    std::cout << "\n";
    if (!log.rows.empty()) {
        const auto& r = log.rows.back();
        std::cout << "  last: t=" << r.t << " demos=" << r.demos << " value=" << format_double(r.value) << "\n";
    }
}

int cmd_inspect(const std::string& target) {
    const fs::path p(target);
    if (!fs::exists(p)) throw IoError("no such file or directory: " + target);
    if (fs::is_regular_file(p)) {
        inspect_log(load_log(p));
        return 0;
    }
    if (fs::exists(p / "manifest.ini")) {
        const auto ds = grid::read_dataset(p);
        std::cout << "dataset: " << grid::kind_name(ds.config.kind) << " seed=" << ds.config.seed;
        for (std::size_t i = 0; i < 3; ++i) std::cout << " " << grid::kSplits[i] << "=" << ds.splits[i].size();
        std::cout << " denominator_shift=" << format_double(ds.denominator_shift) << "\n";
        return 0;
    }
    if (fs::exists(p / "config.ini")) {
        const std::string text = read_text(p / "config.ini");
        const auto cfg = parse_config(text);
        std::cout << "run: " << mode_name(cfg.mode) << " " << cfg.environment << " seed=" << cfg.seed
                  << " config_hash=" << config_hash(cfg) << "\n";
        if (fs::exists(p / "VERSION")) std::cout << "version: " << read_text(p / "VERSION");
        for (const auto& r : load_runs(p)) {
            std::cout << "  " << strategy_name(r.strategy) << ": " << r.logs.size() << " seeds, "
                      << r.logs.front().rows.size() << " rows\n";
        }
        return 0;
    }
    throw IoError("'" + target + "' is not a log, run directory or dataset");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curriculum teaching experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string kind, out, config, in, target;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> run_seed_opt;
    std::vector<std::size_t> per_group;
    std::size_t threads = 0;
    bool plots = false;

    auto* gen = app.add_subcommand("gen-dataset", "Generate a shortest-path or TSP dataset");
    gen->add_option("kind", kind, "shortest-path or tsp")->required()->check(CLI::IsMember({"shortest-path", "tsp"}));
    gen->add_option("--seed", seed, "Master seed");
    gen->add_option("--out", out, "Output directory (default data/<kind>)");
    gen->add_option("--per-group", per_group, "Tasks per group for train, val, test")->expected(3);
    gen->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("--config", config, "Config file (INI)")->required();
    run->add_option("--seed", run_seed_opt, "Override experiment.seed");
    run->add_option("--out", out, "Override experiment.output_dir");
    run->add_flag("--plots", plots, "Also write SVG plots under <out>/plots");

    auto* theory_cmd = app.add_subcommand("validate-theory", "Run the theory property suites");
    theory_cmd->add_option("--seed", seed, "Master seed");
    theory_cmd->add_option("--out", out, "Write report.txt and meta.ini here");

    auto* plot = app.add_subcommand("plot", "Render SVG plots of a finished run");
    plot->add_option("--in", in, "Run directory")->required();
    plot->add_option("--out", out, "Plot directory (default <in>/plots)");

    auto* inspect = app.add_subcommand("inspect", "Describe a log file, run directory or dataset");
    inspect->add_option("path", target, "Path to inspect")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error [usage]: " << e.what() << "\n" << app.help();
        return exit_code(ErrorCategory::Usage);
    }

    try {
        if (*gen) return cmd_gen_dataset(kind, seed, out, per_group, threads);
        if (*run) return cmd_run(config, run_seed_opt, out, plots);
        if (*theory_cmd) return cmd_validate_theory(seed, out);
        if (*plot) return cmd_plot(in, out);
        if (*inspect) return cmd_inspect(target);
    } catch (const Error& e) {
        std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
