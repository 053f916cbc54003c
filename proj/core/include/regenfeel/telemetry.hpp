#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace regenfeel::telemetry {

struct TraceRow {
    double t = 0.0;
    double lead_position = 0.0;
    double lead_velocity = 0.0;
    double lead_acceleration = 0.0;
    double follower_position = 0.0;
    double follower_velocity = 0.0;
    double follower_acceleration = 0.0;
    double gap = 0.0;
    double throttle = 0.0;
    double brake_x = 0.0;
    double F_reg = 0.0;
    double F_fric = 0.0;
    double a_demand = 0.0;
    double F_sea_ref = 0.0;
    double F_sea_actual = 0.0;
    double F_dyno_ref = 0.0;
    double F_dyno_actual = 0.0;
    double F_pedal_felt = 0.0;
    double F_throttle = 0.0;
    double P_regen = 0.0;
    bool saturated = false;
    bool collision = false;
};

inline constexpr std::size_t kColumnCount = 22;

/// CSV header order; also the field names of live state frames.
[[nodiscard]] const std::array<std::string_view, kColumnCount>& column_names();

/// Numeric view of a row in column order (flags as 0/1).
[[nodiscard]] std::array<double, kColumnCount> row_values(const TraceRow& row);
[[nodiscard]] TraceRow row_from_values(const std::array<double, kColumnCount>& v);

struct Trace {
    double dt = 0.001;
    std::vector<TraceRow> rows;

    [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
};

/// Shortest round-trip formatting: reading the file back yields the
/// identical doubles.
void write_trace_csv(std::ostream& os, const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);

/// Throws std::runtime_error on a header mismatch or a malformed cell.
[[nodiscard]] Trace read_trace_csv(std::istream& is);
[[nodiscard]] Trace read_trace_csv(const std::string& path);

/// Schema problems found in the trace; empty when valid.
[[nodiscard]] std::vector<std::string> validate_trace(const Trace& trace);

struct HardBrakingParams {
    double threshold = 0.5 * 9.8; // m/s^2
    double min_gap = 0.5;         // s, closer events merge
};

struct MetricParams {
    HardBrakingParams hard_braking{};
    double reference_gap = 30.0;  // m
    double throttle_eps = 0.02;
};

struct TrialMetrics {
    int hard_braking_count = 0;
    double pct_rmse_gap = 0.0;
    double regen_energy = 0.0;     // J
    double pct_throttle_use = 0.0;
    int collision_count = 0;
    // Throttle use at alternative thresholds: eps = 0.01, 0.02, 0.05.
    std::array<double, 3> throttle_use_sensitivity{};

    friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

inline constexpr std::array<double, 3> kThrottleEpsSweep{0.01, 0.02, 0.05};

[[nodiscard]] int count_hard_brakings(const Trace& trace, const HardBrakingParams& p = {});
[[nodiscard]] double pct_rmse_gap(const Trace& trace, double reference_gap = 30.0);
[[nodiscard]] double regen_energy(const Trace& trace);
[[nodiscard]] double pct_throttle_use(const Trace& trace, double eps = 0.02);
[[nodiscard]] int count_collisions(const Trace& trace);

[[nodiscard]] TrialMetrics compute_metrics(const Trace& trace, const MetricParams& p = {});

[[nodiscard]] std::string metrics_to_json(const TrialMetrics& m);

/// Shortest round-trip decimal representation of a double.
[[nodiscard]] std::string format_double(double v);

} // namespace regenfeel::telemetry
