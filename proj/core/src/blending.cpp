#include "regenfeel/blending.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace regenfeel::blend {

namespace {

void require_fraction(double v, const char* what)
{
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw std::domain_error(std::string(what) + " must lie in [0, 1]");
    }
}

void require_speed(double v)
{
    if (!std::isfinite(v) || v < 0.0) {
        throw std::domain_error("speed must be non-negative and finite");
    }
}

} // namespace

std::string to_string(DriveCondition c)
{
    std::string s = c.pedal_mode == PedalMode::TwoPedal ? "two-pedal-" : "one-pedal-";
    s += c.compensation == Compensation::On ? "compensated" : "uncompensated";
    return s;
}

DriveCondition parse_condition(std::string_view name)
{
    for (auto mode : {PedalMode::TwoPedal, PedalMode::OnePedal}) {
        for (auto comp : {Compensation::On, Compensation::Off}) {
            DriveCondition c{mode, comp};
            if (to_string(c) == name) {
                return c;
            }
        }
    }
    throw std::invalid_argument("unknown drive condition '" + std::string(name) + "'");
}

void OnePedalParams::validate() const
{
    if (!(regen_decel_cap_g > 0.0) || !std::isfinite(regen_decel_cap_g)) {
        throw std::invalid_argument("one_pedal.regen_decel_cap_g must be positive");
    }
    if (!(throttle_release_full >= 0.0 && throttle_release_full < throttle_release_start &&
          throttle_release_start <= 1.0)) {
        throw std::invalid_argument(
            "one_pedal requires 0 <= throttle_release_full < throttle_release_start <= 1");
    }
    if (!(regen_slew > 0.0) || !std::isfinite(regen_slew)) {
        throw std::invalid_argument("one_pedal.regen_slew must be positive");
    }
}

void ThrottlePedalParams::validate() const
{
    if (!(preload >= 0.0 && stiffness >= 0.0 && force_max > 0.0)) {
        throw std::invalid_argument("throttle_pedal parameters must be non-negative");
    }
}

double liftoff_activation(double throttle, const OnePedalParams& op)
{
    if (throttle >= op.throttle_release_start) {
        return 0.0;
    }
    if (throttle <= op.throttle_release_full) {
        return 1.0;
    }
    return (op.throttle_release_start - throttle) /
           (op.throttle_release_start - op.throttle_release_full);
}

BlendCommand distribute_two_pedal(maps::PedalDisplacement brake,
                                  double speed,
                                  const maps::MapParams& p)
{
    require_speed(speed);
    const double accel = maps::pedal_to_decel(brake, p);
    const double demand = p.vehicle_mass * -accel;
    const double regen = std::min(demand, maps::regen_capacity(speed, p));
    return BlendCommand{regen, demand - regen, accel};
}

BlendCommand distribute_one_pedal(double throttle,
                                  maps::PedalDisplacement emergency,
                                  double speed,
                                  const maps::MapParams& p,
                                  const OnePedalParams& op,
                                  const BlendCommand& prev,
                                  double dt)
{
    require_fraction(throttle, "throttle");
    require_speed(speed);
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::domain_error("dt must be positive");
    }

    const double capacity = maps::regen_capacity(speed, p);
    const double cap_force = p.vehicle_mass * op.regen_decel_cap_g * p.gravity;
    const double liftoff = liftoff_activation(throttle, op) * std::min(capacity, cap_force);
    const double pedal_demand = p.vehicle_mass * -maps::pedal_to_decel(emergency, p);

    // The pedal demand is a total-deceleration request; lift-off regen counts toward it.
    const double total_target = std::max(liftoff, pedal_demand);
    const double regen_target = op.use_residual_regen ? std::min(total_target, capacity) : liftoff;

    const double step = op.regen_slew * dt;
    double regen = std::clamp(regen_target, prev.regen - step, prev.regen + step);
    regen = std::clamp(regen, 0.0, capacity);

    // A slewing release may momentarily exceed the request; the regen still acts.
    const double friction = std::max(0.0, total_target - regen);
    const double total = regen + friction;
    return BlendCommand{regen, friction, total == 0.0 ? 0.0 : -total / p.vehicle_mass};
}

HapticTargets compensation_targets(const BlendCommand& cmd,
                                   maps::PedalDisplacement brake,
                                   bool pedal_touched,
                                   DriveCondition cond,
                                   const maps::MapParams& p,
                                   double sea_force_limit)
{
    HapticTargets out;
    if (!pedal_touched) {
        return out;
    }

    const double pedal_demand = p.vehicle_mass * -maps::pedal_to_decel(brake, p);
    const double friction_share =
        pedal_demand > 0.0 ? std::clamp(cmd.friction / pedal_demand, 0.0, 1.0) : 0.0;
    out.dyno_force = maps::friction_reaction_force(brake) * friction_share;

    if (cond.compensation == Compensation::On) {
        const double felt = maps::brakeforce_to_pedal_force(cmd.total(), p);
        out.sea_force = std::clamp(felt - out.dyno_force, 0.0, sea_force_limit);
    }
    return out;
}

double throttle_pedal_force(double throttle, const ThrottlePedalParams& tp)
{
    require_fraction(throttle, "throttle");
    return std::min(tp.preload + tp.stiffness * throttle, tp.force_max);
}

} // namespace regenfeel::blend
