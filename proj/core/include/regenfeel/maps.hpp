#pragma once

#include <optional>

namespace regenfeel::maps {

/// Brake pedal stroke in millimetres. Construction rejects values outside
/// [0, kMaxStroke] with std::domain_error; callers clamp explicitly.
class PedalDisplacement {
public:
    static constexpr double kMaxStroke = 80.0;

    constexpr PedalDisplacement() = default;
    explicit PedalDisplacement(double millimetres);

    /// Clamps into the valid stroke instead of throwing. NaN still throws.
    [[nodiscard]] static PedalDisplacement clamped(double millimetres);

    [[nodiscard]] constexpr double mm() const noexcept { return mm_; }

private:
    double mm_ = 0.0;
};

struct MapParams {
    double gravity        = 9.8;      // m/s^2
    double vehicle_mass   = 1200.0;   // kg
    double regen_power    = 30000.0;  // W, constant motor braking power
    double v_low_cut      = 4.0;      // m/s
    double v_high_cut     = 33.0;     // m/s
    double ramp_width     = 1.0;      // m/s, inside each cutoff

    // Upper-branch slope of the force-domain feel curve (N per N). When
    // unset it is derived so the curve is the exact image of the
    // displacement-domain feel curve under the deceleration map.
    std::optional<double> force_feel_upper_slope;

    void validate() const;
};

/// Conventional brake pedal feel: total pedal force (N) at displacement x.
[[nodiscard]] double pedal_feel_force(PedalDisplacement x);

/// Deceleration demand (m/s^2, <= 0) for brake displacement x.
[[nodiscard]] double pedal_to_decel(PedalDisplacement x, const MapParams& p);

/// Inverse of pedal_to_decel on its range: displacement that demands the
/// given deceleration magnitude (m/s^2, >= 0). Saturates at full stroke.
[[nodiscard]] PedalDisplacement decel_to_pedal(double decel_magnitude, const MapParams& p);

/// Reaction force (N) the friction brake's master cylinder puts on the pedal.
[[nodiscard]] double friction_reaction_force(PedalDisplacement x);

/// Maximum regenerative braking force (N) available at speed v (m/s).
[[nodiscard]] double regen_capacity(double speed, const MapParams& p);

/// Conventional pedal feel expressed over total braking force (N -> N).
[[nodiscard]] double brakeforce_to_pedal_force(double total_brake_force, const MapParams& p);

/// Total braking force at the knee of the feel curve (the 20 mm point).
[[nodiscard]] double feel_breakpoint_force(const MapParams& p);

} // namespace regenfeel::maps
