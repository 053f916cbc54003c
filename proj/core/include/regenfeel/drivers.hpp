#pragma once

#include "regenfeel/blending.hpp"
#include "regenfeel/maps.hpp"
#include "regenfeel/vehicle.hpp"

#include <deque>
#include <string_view>
#include <vector>

namespace regenfeel::drivers {

struct PedalInputs {
    double throttle = 0.0; // [0, 1]
    double brake_x = 0.0;  // mm, [0, 80]

    friend bool operator==(const PedalInputs&, const PedalInputs&) = default;
};

struct ExclusionGuard {
    bool enabled = true;
    double throttle_threshold = 0.05;
    double brake_threshold = 2.0; // mm
};

/// Throws std::domain_error when a value is outside its pedal range.
void validate(const PedalInputs& in);

/// Brake wins when both pedals are past their thresholds.
[[nodiscard]] PedalInputs apply_guard(PedalInputs in, const ExclusionGuard& guard);

struct ScriptKnot {
    double t = 0.0;
    double throttle = 0.0;
    double brake_x = 0.0;
};

struct PedalScript {
    std::vector<ScriptKnot> knots;

    void validate() const;
    [[nodiscard]] double end_time() const;
};

/// Knot list as JSON: [{"t":0,"throttle":0,"brake_x":0}, ...].
[[nodiscard]] PedalScript script_from_json(std::string_view text);

/// Piecewise-linear interpolation; holds the last knot past the end.
[[nodiscard]] PedalInputs scripted_inputs(double t, const PedalScript& script);

struct FollowerDriverParams {
    double target_gap = 30.0;       // m
    double kp_gap = 0.20;           // m/s^2 per m of gap error
    double kd_gap = 1.30;           // m/s^2 per m/s of closing speed
    double reaction_delay = 0.25;   // s
    double brake_rate_limit = 160.0; // mm/s
    double throttle_rate_limit = 1.5; // 1/s
    double coast_band = 0.25;       // m/s^2; two-pedal drivers coast inside +-band
    ExclusionGuard guard{};

    void validate() const;
};

/// Synthetic car-following driver: delayed PD on gap error and closing
/// speed, turned into pedal positions for the active pedal mode.
class FollowerDriver {
public:
    FollowerDriver(FollowerDriverParams params,
                   blend::PedalMode mode,
                   maps::MapParams map,
                   blend::OnePedalParams one_pedal,
                   world::FollowerParams vehicle,
                   double dt);

    PedalInputs step(const world::WorldState& world);

    /// Acceleration request from the delayed observation (m/s^2).
    [[nodiscard]] double last_request() const noexcept { return request_; }

private:
    struct Observation {
        double gap = 0.0;
        double closing = 0.0; // lead speed minus follower speed
    };

    [[nodiscard]] PedalInputs map_request(double accel) const;
    [[nodiscard]] double one_pedal_throttle(double accel) const;

    FollowerDriverParams params_;
    blend::PedalMode mode_;
    maps::MapParams map_;
    blend::OnePedalParams one_pedal_;
    world::FollowerParams vehicle_;
    double dt_;
    std::size_t delay_ticks_;
    std::deque<Observation> history_;
    PedalInputs output_;
    double request_ = 0.0;
};

} // namespace regenfeel::drivers
