#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "changecast/config.hpp"
#include "changecast/metrics_io.hpp"
#include "changecast/simulation.hpp"

namespace changecast {

namespace cli_detail {

/// Default worker count: CHANGECAST_PARALLEL when set to a positive integer,
/// else 1 (each sweep cell is an isolated single-threaded simulation either
/// way, so results never depend on this).
inline unsigned default_parallelism() {
    if (const char* env = std::getenv("CHANGECAST_PARALLEL")) {
        char* end = nullptr;
        const unsigned long value = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && value >= 1) return static_cast<unsigned>(value);
    }
    return 1;
}

inline void write_lines(const std::string& out_path, const std::vector<std::string>& lines) {
    if (out_path.empty()) {
        for (const auto& line : lines) std::cout << line << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + out_path);
    for (const auto& line : lines) out << line << '\n';
    if (!out) throw std::runtime_error("failed writing output file " + out_path);
}

/// Run every cell (validated up front), dispatching to a worker pool; the
/// report vector is indexed by cell, so output order never depends on timing.
inline std::vector<MetricsReport> run_cells(const std::vector<SweepCell>& cells,
                                            unsigned parallel) {
    std::vector<MetricsReport> reports(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                reports[i] = run_scenario(cells[i].config).metrics;
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const unsigned workers =
        std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(cells.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return reports;
}

inline int do_run(const std::string& scenario_path, const std::optional<std::uint64_t>& seed,
                  const std::string& out_path, const std::string& csv_path) {
    ScenarioConfig config = load_scenario_file(scenario_path);
    if (seed.has_value()) config.seed = *seed;
    validate_scenario(config);
    const SimulationResult result = run_scenario(config);
    const auto record = metrics_record(0, config.seed, {}, config, result.metrics);
    write_lines(out_path, {record.dump()});
    if (!csv_path.empty())
        write_lines(csv_path, {csv_header({}), csv_row(0, config.seed, {}, result.metrics)});
    return 0;
}

inline int do_sweep(const std::string& sweep_path, unsigned parallel, const std::string& out_path,
                    const std::string& csv_path) {
    const SweepSpec spec = load_sweep_file(sweep_path);
    const std::vector<SweepCell> cells = expand_sweep(spec);
    for (const auto& cell : cells) validate_scenario(cell.config);
    const std::vector<MetricsReport> reports = run_cells(cells, parallel);

    std::vector<std::string> lines;
    lines.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        lines.push_back(
            metrics_record(cells[i].index, cells[i].seed, cells[i].params, cells[i].config,
                           reports[i])
                .dump());
    write_lines(out_path, lines);

    if (!csv_path.empty()) {
        std::vector<std::string> axis_paths;
        for (const auto& axis : spec.axes) axis_paths.push_back(axis.path);
        std::vector<std::string> rows{csv_header(axis_paths)};
        for (std::size_t i = 0; i < cells.size(); ++i)
            rows.push_back(csv_row(cells[i].index, cells[i].seed, cells[i].params, reports[i]));
        write_lines(csv_path, rows);
    }
    return 0;
}

inline int do_validate(const std::string& file_path) {
    const nlohmann::json j = cfg_detail::parse_json_file(file_path);
    if (j.is_object() && j.contains("base")) {
        const SweepSpec spec = sweep_from_json(j);
        for (const auto& cell : expand_sweep(spec)) validate_scenario(cell.config);
    } else {
        validate_scenario(scenario_from_json(j));
    }
    std::cout << "ok\n";
    return 0;
}

}  // namespace cli_detail

/// Exit codes: 0 success, 1 unreadable/invalid configuration, 2 runtime error.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"change-triggered distributed monitoring simulator"};
    app.require_subcommand(1);

    std::string scenario_path, sweep_path, validate_path;
    std::string run_out, run_csv, sweep_out, sweep_csv;
    std::uint64_t seed_value = 0;
    unsigned parallel = cli_detail::default_parallelism();

    auto* run_cmd = app.add_subcommand("run", "Run one scenario; emit one metrics record");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    auto* seed_opt = run_cmd->add_option("--seed", seed_value, "override the scenario seed");
    run_cmd->add_option("--out", run_out, "write the JSONL record to this file (default stdout)");
    run_cmd->add_option("--csv", run_csv, "also write the flat CSV export to this file");

    auto* sweep_cmd =
        app.add_subcommand("sweep", "Run a parameter sweep; emit one record per cell");
    sweep_cmd->add_option("sweep", sweep_path, "sweep JSON file")->required();
    sweep_cmd->add_option("--out", sweep_out, "write JSONL records to this file (default stdout)");
    sweep_cmd->add_option("--csv", sweep_csv, "also write the flat CSV export to this file");
    sweep_cmd
        ->add_option("--parallel", parallel,
                     "worker threads (default CHANGECAST_PARALLEL or 1)")
        ->check(CLI::PositiveNumber);

    auto* validate_cmd =
        app.add_subcommand("validate", "Parse a scenario or sweep file and check invariants");
    validate_cmd->add_option("file", validate_path, "scenario or sweep JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (run_cmd->parsed()) {
            std::optional<std::uint64_t> seed;
            if (seed_opt->count() > 0) seed = seed_value;
            return cli_detail::do_run(scenario_path, seed, run_out, run_csv);
        }
        if (sweep_cmd->parsed()) return cli_detail::do_sweep(sweep_path, parallel, sweep_out, sweep_csv);
        if (validate_cmd->parsed()) return cli_detail::do_validate(validate_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace changecast
