#include "regenfeel/config.hpp"
#include "regenfeel/harness.hpp"
#include "regenfeel/sea_analysis.hpp"
#include "regenfeel/server.hpp"
#include "regenfeel/telemetry.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace regenfeel;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            seeds.push_back(std::stoull(part));
            continue;
        }
        const auto lo = std::stoull(part.substr(0, dots));
        const auto hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) {
            throw std::invalid_argument("seed range " + part + " is empty");
        }
        for (auto s = lo; s <= hi; ++s) {
            seeds.push_back(s);
        }
    }
    if (seeds.empty()) {
        throw std::invalid_argument("no seeds given");
    }
    return seeds;
}

ExperimentConfig load_or_default(const std::string& path)
{
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

void print_metrics(const telemetry::TrialMetrics& m)
{
    std::cout << telemetry::metrics_to_json(m) << '\n';
}

server::SessionServer* g_server = nullptr;

extern "C" void on_signal(int)
{
    if (g_server) {
        std::thread([] { g_server->stop(); }).detach();
    }
}

int cmd_run(const std::string& config_path, const std::string& condition,
            std::optional<std::uint64_t> seed, const std::string& out)
{
    ExperimentConfig cfg = load_or_default(config_path);
    if (!condition.empty()) {
        cfg.condition = blend::parse_condition(condition);
    }
    const auto s = seed.value_or(cfg.run.seeds.front());
    const auto result = harness::run_trial(cfg, s);
    const auto dir = out.empty() ? cfg.run.output_dir : out;
    harness::write_trial_outputs(dir, cfg, s, result);
    std::cerr << "wrote " << result.trace.size() << " rows to " << dir
              << (result.timed_out ? " (hit max_duration)" : "") << '\n';
    print_metrics(result.metrics);
    return 0;
}

int cmd_batch(const std::string& config_path, const std::string& seeds_text,
              const std::vector<std::string>& condition_names, const std::string& out,
              unsigned jobs, bool traces)
{
    ExperimentConfig cfg = load_or_default(config_path);
    const auto seeds = seeds_text.empty() ? cfg.run.seeds : parse_seeds(seeds_text);
    std::vector<blend::DriveCondition> conditions;
    for (const auto& n : condition_names) {
        conditions.push_back(blend::parse_condition(n));
    }
    if (conditions.empty()) {
        conditions = harness::all_conditions();
    }
    const auto dir = out.empty() ? cfg.run.output_dir : out;
    harness::BatchOptions opts;
    opts.jobs = jobs;
    if (traces) {
        opts.trace_dir = dir;
    }
    const auto result = harness::run_batch(cfg, conditions, seeds, opts);

    std::filesystem::create_directories(dir);
    const auto csv = std::filesystem::path(dir) / "batch.csv";
    std::ofstream os(csv);
    harness::write_batch_csv(os, result);
    harness::write_batch_csv(std::cout, result);
    std::cerr << "wrote " << csv.string() << '\n';

    std::size_t failures = 0;
    for (const auto& row : result.rows) {
        if (!row.metrics) {
            ++failures;
            std::cerr << blend::to_string(row.condition) << " seed " << row.seed
                      << " failed: " << row.error << '\n';
        }
    }
    return failures == 0 ? 0 : 2;
}

int cmd_serve(const std::string& config_path, unsigned short port, const std::string& address,
              std::optional<std::uint64_t> seed)
{
    ExperimentConfig cfg = load_or_default(config_path);
    server::ServerOptions opts;
    opts.port = port;
    opts.address = address;
    opts.seed = seed.value_or(cfg.run.seeds.front());
    server::SessionServer srv(cfg, opts);
    srv.start();
    g_server = &srv;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "live session on ws://" << address << ':' << srv.port() << " ("
              << blend::to_string(cfg.condition) << ", seed " << opts.seed << ")\n";
    srv.wait();
    g_server = nullptr;
    return 0;
}

int cmd_frf(const std::string& config_path, const std::string& out, bool sweep)
{
    const ExperimentConfig cfg = load_or_default(config_path);
    const auto frf = sea::measure_frf(sea::log_grid(0.5, 60.0, 30), 75.0, cfg.gains, cfg.plant);
    const double err = sea::sine_tracking_error_pct(1.0, 75.0, cfg.gains, cfg.plant);
    const auto dir = out.empty() ? cfg.run.output_dir : out;
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(std::filesystem::path(dir) / "frf.csv");
        sea::write_frf_csv(os, frf);
    }
    std::cout << "crossover_hz "
              << (frf.crossover_hz ? telemetry::format_double(*frf.crossover_hz) : "none") << '\n';
    std::cout << "tracking_rms_error_pct_1hz_75n " << telemetry::format_double(err) << '\n';
    if (sweep) {
        const auto report = sea::coupled_stability_sweep(sea::SweepGrid{}, cfg.gains, cfg.plant);
        std::ofstream os(std::filesystem::path(dir) / "stability_sweep.csv");
        sea::write_sweep_csv(os, report);
        std::cout << "stable_fraction " << telemetry::format_double(report.stable_fraction())
                  << '\n';
    }
    return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& config_path)
{
    const ExperimentConfig cfg = load_or_default(config_path);
    telemetry::Trace trace;
    try {
        trace = telemetry::read_trace_csv(trace_path);
    } catch (const std::runtime_error& e) {
        std::cerr << "schema: " << e.what() << '\n';
        return 3;
    }
    auto problems = telemetry::validate_trace(trace);
    if (trace.empty()) {
        problems.emplace_back("trace has no rows");
    }
    for (const auto& p : problems) {
        std::cerr << "schema: " << p << '\n';
    }
    if (!trace.empty()) {
        print_metrics(telemetry::compute_metrics(trace, cfg.metrics));
    }
    return problems.empty() ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"regenfeel: blended regenerative braking and haptic pedal simulation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string condition;
    std::string out;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run one trial with the configured driver");
    run->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
    run->add_option("--condition", condition, "e.g. one-pedal-compensated");
    run->add_option("--seed", seed, "Lead schedule seed");
    run->add_option("--out", out, "Output directory");

    std::string seeds_text;
    std::vector<std::string> conditions;
    unsigned jobs = 0;
    bool traces = false;
    auto* batch = app.add_subcommand("batch", "Run conditions x seeds and summarise");
    batch->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
    batch->add_option("--seeds", seeds_text, "Seeds, e.g. 1..20 or 1,4,9");
    batch->add_option("--conditions", conditions, "Subset of conditions (default: all four)")
        ->delimiter(',');
    batch->add_option("--out", out, "Output directory");
    batch->add_option("--jobs", jobs, "Worker threads (default: all cores)");
    batch->add_flag("--traces", traces, "Also write every trial's trace");

    unsigned short port = 8765;
    std::string address = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "Serve a live human-driven session over WebSocket");
    serve->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
    serve->add_option("--port", port, "TCP port");
    serve->add_option("--address", address, "Bind address");
    serve->add_option("--seed", seed, "Lead schedule seed");

    bool sweep = false;
    auto* frf = app.add_subcommand("frf", "SEA force-control frequency response");
    frf->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
    frf->add_option("--out", out, "Output directory");
    frf->add_flag("--sweep", sweep, "Also run the coupled-stability sweep");

    std::string trace_path;
    auto* replay = app.add_subcommand("replay", "Recompute metrics from a trace CSV");
    replay->add_option("--trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);
    replay->add_option("--config", config_path, "Config JSON for metric parameters")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config_path, condition, seed, out);
        }
        if (*batch) {
            return cmd_batch(config_path, seeds_text, conditions, out, jobs, traces);
        }
        if (*serve) {
            return cmd_serve(config_path, port, address, seed);
        }
        if (*frf) {
            return cmd_frf(config_path, out, sweep);
        }
        if (*replay) {
            return cmd_replay(trace_path, config_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
