#include "regenfeel/maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace regenfeel::maps {

namespace {

constexpr double kKnee = 20.0; // mm

// Displacement-domain feel curve.
constexpr double kFeelLowSlope  = 0.80;
constexpr double kFeelLowOffset = 18.17;
constexpr double kFeelHighSlope = 3.92;
constexpr double kFeelHighOffset = -44.23;

// Deceleration map, in units of g per mm.
constexpr double kDecelLowSlope  = 0.01;
constexpr double kDecelHighSlope = 0.02;
constexpr double kDecelHighOffset = -0.2;

// Friction reaction map. The upper offset is rebuilt from continuity.
constexpr double kFricLowSlope  = 0.16;
constexpr double kFricLowOffset = 3.63;
constexpr double kFricHighSlope = 0.78;

// Force-domain feel curve, lower branch.
constexpr double kForceFeelLowSlope  = 0.0068;
constexpr double kForceFeelLowOffset = 18.17;

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) {
        throw std::domain_error(std::string(what) + " must be finite");
    }
}

double force_feel_upper_slope(const MapParams& p)
{
    if (p.force_feel_upper_slope) {
        return *p.force_feel_upper_slope;
    }
    return kFeelHighSlope / (p.vehicle_mass * p.gravity * kDecelHighSlope);
}

} // namespace

PedalDisplacement::PedalDisplacement(double millimetres)
    : mm_(millimetres)
{
    if (!std::isfinite(millimetres) || millimetres < 0.0 || millimetres > kMaxStroke) {
        throw std::domain_error("pedal displacement " + std::to_string(millimetres) +
                                " mm outside [0, 80]");
    }
}

PedalDisplacement PedalDisplacement::clamped(double millimetres)
{
    if (std::isnan(millimetres)) {
        throw std::domain_error("pedal displacement is NaN");
    }
    return PedalDisplacement(std::clamp(millimetres, 0.0, kMaxStroke));
}

void MapParams::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw std::invalid_argument(std::string("map.") + name + " must be positive and finite");
        }
    };
    positive(gravity, "gravity");
    positive(vehicle_mass, "vehicle_mass");
    positive(regen_power, "regen_power");
    positive(v_low_cut, "v_low_cut");
    positive(v_high_cut, "v_high_cut");
    positive(ramp_width, "ramp_width");
    if (v_low_cut >= v_high_cut) {
        throw std::invalid_argument("map.v_low_cut must be below map.v_high_cut");
    }
    if (ramp_width >= v_low_cut) {
        throw std::invalid_argument("map.ramp_width must be below map.v_low_cut");
    }
    if (2.0 * ramp_width > v_high_cut - v_low_cut) {
        throw std::invalid_argument("map.ramp_width too wide for the regen speed window");
    }
    if (force_feel_upper_slope) {
        positive(*force_feel_upper_slope, "force_feel_upper_slope");
    }
}

double pedal_feel_force(PedalDisplacement x)
{
    const double mm = x.mm();
    if (mm <= kKnee) {
        return kFeelLowSlope * mm + kFeelLowOffset;
    }
    return kFeelHighSlope * mm + kFeelHighOffset;
}

double pedal_to_decel(PedalDisplacement x, const MapParams& p)
{
    const double mm = x.mm();
    const double in_g = mm <= kKnee ? kDecelLowSlope * mm : kDecelHighSlope * mm + kDecelHighOffset;
    // -0.0 would leak into traces as "-0".
    return in_g == 0.0 ? 0.0 : -in_g * p.gravity;
}

PedalDisplacement decel_to_pedal(double decel_magnitude, const MapParams& p)
{
    require_finite(decel_magnitude, "deceleration");
    if (decel_magnitude < 0.0) {
        throw std::domain_error("deceleration magnitude must be non-negative");
    }
    const double in_g = decel_magnitude / p.gravity;
    const double knee_g = kDecelLowSlope * kKnee;
    const double mm = in_g <= knee_g ? in_g / kDecelLowSlope
                                     : (in_g - kDecelHighOffset) / kDecelHighSlope;
    return PedalDisplacement::clamped(mm);
}

double friction_reaction_force(PedalDisplacement x)
{
    const double mm = x.mm();
    if (mm <= kKnee) {
        return kFricLowSlope * mm + kFricLowOffset;
    }
    const double at_knee = kFricLowSlope * kKnee + kFricLowOffset;
    return at_knee + kFricHighSlope * (mm - kKnee);
}

double regen_capacity(double speed, const MapParams& p)
{
    require_finite(speed, "speed");
    if (speed < 0.0) {
        throw std::domain_error("speed must be non-negative");
    }
    if (speed <= p.v_low_cut || speed >= p.v_high_cut) {
        return 0.0;
    }
    const double rise = std::min(1.0, (speed - p.v_low_cut) / p.ramp_width);
    const double fall = std::min(1.0, (p.v_high_cut - speed) / p.ramp_width);
    return rise * fall * p.regen_power / speed;
}

double feel_breakpoint_force(const MapParams& p)
{
    return p.vehicle_mass * p.gravity * kDecelLowSlope * kKnee;
}

double brakeforce_to_pedal_force(double total_brake_force, const MapParams& p)
{
    require_finite(total_brake_force, "brake force");
    if (total_brake_force < 0.0) {
        throw std::domain_error("brake force must be non-negative");
    }
    const double knee = feel_breakpoint_force(p);
    if (total_brake_force < knee) {
        return kForceFeelLowSlope * total_brake_force + kForceFeelLowOffset;
    }
    const double at_knee = kForceFeelLowSlope * knee + kForceFeelLowOffset;
    return at_knee + force_feel_upper_slope(p) * (total_brake_force - knee);
}

} // namespace regenfeel::maps
