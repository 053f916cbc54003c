#pragma once

#include "regenfeel/config.hpp"
#include "regenfeel/drivers.hpp"
#include "regenfeel/sea.hpp"
#include "regenfeel/telemetry.hpp"
#include "regenfeel/vehicle.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace regenfeel::harness {

/// One trial's world. Every mode (batch, scripted, live) advances through
/// step(), which fixes the per-tick order: pedal inputs -> blending ->
/// haptic references -> SEA base ticks -> vehicle step -> trace row.
class TrialRunner {
public:
    TrialRunner(ExperimentConfig config, std::uint64_t seed);
    ~TrialRunner();
    TrialRunner(TrialRunner&&) noexcept;
    TrialRunner& operator=(TrialRunner&&) noexcept;

    /// Advances one world tick with the given pedal inputs.
    const telemetry::TraceRow& step(const drivers::PedalInputs& inputs);

    /// Pedal inputs from the configured model driver (follower or script)
    /// for the current world state. Throws for a human-driven config.
    drivers::PedalInputs model_inputs();

    [[nodiscard]] bool done() const noexcept { return done_; }
    [[nodiscard]] bool timed_out() const noexcept { return timed_out_; }
    [[nodiscard]] double time() const noexcept;
    [[nodiscard]] std::uint64_t ticks() const noexcept { return tick_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] const world::WorldState& world() const noexcept { return world_; }
    [[nodiscard]] const world::LeadSchedule& schedule() const noexcept { return schedule_; }
    [[nodiscard]] const telemetry::Trace& trace() const noexcept { return trace_; }
    [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
    [[nodiscard]] telemetry::Trace take_trace() { return std::move(trace_); }

    /// Upper bound on how long a model-driven pursuit trial can last.
    [[nodiscard]] double time_bound() const;

private:
    ExperimentConfig config_;
    std::uint64_t seed_;
    world::LeadSchedule schedule_;
    world::WorldState world_;
    sea::PedalRig rig_;
    blend::BlendCommand prev_cmd_;
    std::unique_ptr<drivers::FollowerDriver> follower_;
    telemetry::Trace trace_;
    std::uint64_t tick_ = 0;
    bool done_ = false;
    bool timed_out_ = false;
};

struct TrialResult {
    telemetry::Trace trace;
    telemetry::TrialMetrics metrics;
    world::LeadSchedule schedule;
    bool timed_out = false;
};

/// Runs the configured model driver to completion.
[[nodiscard]] TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed);

/// trace.csv, trace.json (config + seed sidecar), metrics.json, schedule.json
/// under `dir`, created if needed.
void write_trial_outputs(const std::string& dir,
                         const ExperimentConfig& config,
                         std::uint64_t seed,
                         const TrialResult& result);

struct BatchRow {
    blend::DriveCondition condition;
    std::uint64_t seed = 0;
    std::optional<telemetry::TrialMetrics> metrics;
    std::string error;
    world::LeadSchedule schedule;
};

struct MetricStats {
    double mean = 0.0;
    double sd = 0.0;
};

struct BatchSummary {
    blend::DriveCondition condition;
    std::size_t trials = 0;
    std::size_t failures = 0;
    MetricStats hard_braking_count;
    MetricStats pct_rmse_gap;
    MetricStats regen_energy;
    MetricStats pct_throttle_use;
    MetricStats collision_count;
};

struct BatchResult {
    std::vector<BatchRow> rows;        // condition-major, seeds in order
    std::vector<BatchSummary> summary; // one per condition
};

struct BatchOptions {
    unsigned jobs = 0;                    // 0: hardware concurrency
    std::optional<std::string> trace_dir; // write each trial's outputs here
};

/// Same seed => same lead schedule under every condition. A failing trial is
/// recorded with its error and the batch carries on.
[[nodiscard]] BatchResult run_batch(const ExperimentConfig& config,
                                    const std::vector<blend::DriveCondition>& conditions,
                                    const std::vector<std::uint64_t>& seeds,
                                    const BatchOptions& opts = {});

void write_batch_csv(std::ostream& os, const BatchResult& result);

[[nodiscard]] std::vector<blend::DriveCondition> all_conditions();

} // namespace regenfeel::harness
