#pragma once

#include "regenfeel/blending.hpp"
#include "regenfeel/drivers.hpp"
#include "regenfeel/maps.hpp"
#include "regenfeel/sea.hpp"
#include "regenfeel/telemetry.hpp"
#include "regenfeel/vehicle.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regenfeel {

inline constexpr int kSchemaVersion = 1;

enum class DriverKind { Follower, Script, Human };

struct DriverConfig {
    DriverKind kind = DriverKind::Follower;
    drivers::FollowerDriverParams follower{};
    std::optional<drivers::PedalScript> script;
};

struct RunConfig {
    double world_rate_hz = 1000.0;
    double frame_rate_hz = 50.0;  // live state frames
    double max_duration = 900.0;  // s, hard stop for model-driven trials
    std::optional<double> duration; // s, fixed length (scripted trials)
    double initial_speed = 0.0;   // m/s, follower (and lead) at t = 0
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "out";

    [[nodiscard]] double dt() const noexcept { return 1.0 / world_rate_hz; }
};

struct ExperimentConfig {
    maps::MapParams map{};
    blend::OnePedalParams one_pedal{};
    blend::ThrottlePedalParams throttle_pedal{};
    sea::SeaPlantParams plant{};
    sea::CascadedGains gains{};
    unsigned dyno_phase_offset = 0;
    world::ScenarioParams scenario{};
    world::FollowerParams vehicle{};
    DriverConfig driver{};
    blend::DriveCondition condition{};
    telemetry::MetricParams metrics{};
    RunConfig run{};

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

/// Parses and validates a config document. Unknown keys are rejected.
[[nodiscard]] ExperimentConfig config_from_json(std::string_view text);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

/// Canonical JSON of every field, suitable as a trace sidecar.
[[nodiscard]] std::string config_to_json(const ExperimentConfig& config);

} // namespace regenfeel
