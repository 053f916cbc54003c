#pragma once

#include "regenfeel/maps.hpp"

#include <string>
#include <string_view>

namespace regenfeel::blend {

enum class PedalMode { TwoPedal, OnePedal };
enum class Compensation { Off, On };

struct DriveCondition {
    PedalMode pedal_mode = PedalMode::TwoPedal;
    Compensation compensation = Compensation::On;

    friend bool operator==(const DriveCondition&, const DriveCondition&) = default;
};

/// "two-pedal-compensated", "one-pedal-uncompensated", ...
[[nodiscard]] std::string to_string(DriveCondition c);
/// Throws std::invalid_argument on an unknown name.
[[nodiscard]] DriveCondition parse_condition(std::string_view name);

struct BlendCommand {
    double regen = 0.0;        // N, >= 0
    double friction = 0.0;     // N, >= 0
    double accel_demand = 0.0; // m/s^2, <= 0

    [[nodiscard]] double total() const noexcept { return regen + friction; }
};

struct HapticTargets {
    double sea_force = 0.0;       // N, brake-pedal SEA reference
    double dyno_force = 0.0;      // N, friction reaction rendered by the dynamometer
    double throttle_force = 0.0;  // N, throttle pedal impedance force
};

struct OnePedalParams {
    double regen_decel_cap_g = 0.32;      // lift-off regen saturation, in g
    double throttle_release_start = 0.10; // regen begins below this throttle
    double throttle_release_full = 0.02;  // full lift-off regen at/below this
    double regen_slew = 8000.0;           // N/s
    bool use_residual_regen = true;       // emergency pedal spends spare regen first

    void validate() const;
};

struct ThrottlePedalParams {
    double preload = 8.0;       // N at rest position
    double stiffness = 40.0;    // N per unit throttle travel
    double force_max = 75.0;    // N, device limit

    void validate() const;
};

/// Lift-off regen activation in [0, 1] for the given throttle fraction.
[[nodiscard]] double liftoff_activation(double throttle, const OnePedalParams& op);

[[nodiscard]] BlendCommand distribute_two_pedal(maps::PedalDisplacement brake,
                                                double speed,
                                                const maps::MapParams& p);

[[nodiscard]] BlendCommand distribute_one_pedal(double throttle,
                                                maps::PedalDisplacement emergency,
                                                double speed,
                                                const maps::MapParams& p,
                                                const OnePedalParams& op,
                                                const BlendCommand& prev,
                                                double dt);

/// Reference forces for the SEA pedal and the dynamometer. `pedal_touched`
/// is false when the driver's foot is off the brake pedal; every brake
/// reference is then zero whatever the regen state.
[[nodiscard]] HapticTargets compensation_targets(const BlendCommand& cmd,
                                                 maps::PedalDisplacement brake,
                                                 bool pedal_touched,
                                                 DriveCondition cond,
                                                 const maps::MapParams& p,
                                                 double sea_force_limit = 200.0);

/// Open-loop impedance force of the throttle pedal, saturated at its limit.
[[nodiscard]] double throttle_pedal_force(double throttle, const ThrottlePedalParams& tp);

} // namespace regenfeel::blend
