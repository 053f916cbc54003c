#include "regenfeel/sea.hpp"

#include <algorithm>
#include <cmath>

namespace regenfeel::sea {

namespace {

void check_finite(double v, const char* what)
{
    if (!std::isfinite(v)) {
        throw NumericalFault(std::string("non-finite ") + what);
    }
}

void refresh_spring(SeaState& s, const SeaPlantParams& p)
{
    s.spring_deflection = s.motor_angle / p.reduction() - s.output_angle;
    s.estimated_torque = p.spring_stiffness * s.spring_deflection;
}

// Semi-implicit Euler on the spring side of the reduction.
void advance_motor_side(SeaState& s, double motor_torque, double dt, const SeaPlantParams& p)
{
    const double n = p.reduction();
    const double tau = std::clamp(motor_torque, -p.motor_torque_max, p.motor_torque_max);
    const double omega = s.motor_velocity / n;
    const double accel = (n * tau - p.motor_damping * omega - s.estimated_torque) / p.motor_inertia;
    const double omega_next = omega + dt * accel;
    s.motor_velocity = omega_next * n;
    s.motor_angle += dt * omega_next * n;
}

} // namespace

void SeaPlantParams::validate() const
{
    for (double v : {motor_inertia, motor_damping, spring_stiffness, gear_ratio, capstan_ratio,
                     lever_arm, motor_torque_max, pedal_force_max, pedal_inertia}) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw std::invalid_argument("sea.plant parameters must be positive and finite");
        }
    }
}

SeaState step_plant(const SeaState& state,
                    double motor_torque,
                    double pedal_force_ext,
                    double dt,
                    const SeaPlantParams& p)
{
    check_finite(motor_torque, "motor torque");
    check_finite(pedal_force_ext, "pedal force");
    check_finite(dt, "dt");

    SeaState s = state;
    const double out_accel = (s.estimated_torque - pedal_force_ext * p.lever_arm) / p.pedal_inertia;
    advance_motor_side(s, motor_torque, dt, p);
    s.output_velocity += dt * out_accel;
    s.output_angle += dt * s.output_velocity;
    refresh_spring(s, p);
    check_finite(s.estimated_torque, "plant state");
    return s;
}

SeaState step_plant_driven(const SeaState& state,
                           double motor_torque,
                           double output_angle,
                           double output_velocity,
                           double dt,
                           const SeaPlantParams& p)
{
    check_finite(motor_torque, "motor torque");
    check_finite(output_angle, "output angle");
    check_finite(output_velocity, "output velocity");
    check_finite(dt, "dt");

    SeaState s = state;
    advance_motor_side(s, motor_torque, dt, p);
    s.output_angle = output_angle;
    s.output_velocity = output_velocity;
    refresh_spring(s, p);
    check_finite(s.estimated_torque, "plant state");
    return s;
}

double stored_energy(const SeaState& s, const SeaPlantParams& p) noexcept
{
    const double omega = s.motor_velocity / p.reduction();
    return 0.5 * p.motor_inertia * omega * omega +
           0.5 * p.pedal_inertia * s.output_velocity * s.output_velocity +
           0.5 * p.spring_stiffness * s.spring_deflection * s.spring_deflection;
}

void CascadedGains::validate() const
{
    for (double v : {torque_kp, torque_ki, velocity_kp, velocity_ki, velocity_ref_limit}) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw std::invalid_argument("sea.gains must be positive and finite");
        }
    }
}

CascadedForceController::CascadedForceController(CascadedGains gains, SeaPlantParams plant)
    : gains_(gains), plant_(plant)
{
    gains_.validate();
    plant_.validate();
}

void CascadedForceController::reset()
{
    torque_integral_ = 0.0;
    velocity_integral_ = 0.0;
    velocity_ref_ = 0.0;
    command_ = 0.0;
    saturated_ = false;
}

double CascadedForceController::step(double ref_force, const SeaState& state, std::uint64_t tick)
{
    if (tick % kOuterDivider == 0) {
        const double dt = static_cast<double>(kOuterDivider) * kBaseDt;
        const double ref = std::clamp(ref_force, -plant_.pedal_force_max, plant_.pedal_force_max) *
                           plant_.lever_arm;
        const double err = ref - state.estimated_torque;
        const double ff = gains_.output_velocity_feedforward ? state.output_velocity : 0.0;
        const double limit = gains_.velocity_ref_limit;

        const double candidate = torque_integral_ + gains_.torque_ki * err * dt;
        const double unclamped = gains_.torque_kp * err + candidate + ff;
        if (std::abs(unclamped) <= limit || unclamped * err < 0.0) {
            torque_integral_ = candidate;
        }
        velocity_ref_ = std::clamp(gains_.torque_kp * err + torque_integral_ + ff, -limit, limit);
    }

    if (tick % kInnerDivider == 0) {
        const double dt = static_cast<double>(kInnerDivider) * kBaseDt;
        const double omega = state.motor_velocity / plant_.reduction();
        const double err = velocity_ref_ - omega;
        const double max = plant_.motor_torque_max;

        const double candidate = velocity_integral_ + gains_.velocity_ki * err * dt;
        const double unclamped = gains_.velocity_kp * err + candidate;
        saturated_ = std::abs(unclamped) > max;
        if (!saturated_ || unclamped * err < 0.0) {
            velocity_integral_ = std::clamp(candidate, -max, max);
        }
        command_ = std::clamp(gains_.velocity_kp * err + velocity_integral_, -max, max);
    }
    return command_;
}

PedalRig::PedalRig(SeaPlantParams plant, CascadedGains gains, unsigned dyno_phase_offset)
    : plant_(plant),
      sea_ctrl_(gains, plant),
      dyno_ctrl_(gains, plant),
      dyno_phase_offset_(dyno_phase_offset)
{
}

void PedalRig::reset()
{
    sea_ctrl_.reset();
    dyno_ctrl_.reset();
    sea_ = {};
    dyno_ = {};
    last_pedal_mm_ = 0.0;
    tick_ = 0;
}

RigSample PedalRig::advance(double pedal_mm, double sea_ref, double dyno_ref, double world_dt)
{
    const double ratio = world_dt / kBaseDt;
    const auto substeps = static_cast<int>(std::lround(ratio));
    if (substeps < 1 || std::abs(ratio - substeps) > 1e-9) {
        throw std::invalid_argument("world_dt must be a whole number of SEA base ticks");
    }

    const double to_angle = -1.0 / (1000.0 * plant_.lever_arm);
    const double velocity = (pedal_mm - last_pedal_mm_) * to_angle / world_dt;

    RigSample out;
    for (int i = 1; i <= substeps; ++i) {
        const double mm = last_pedal_mm_ + (pedal_mm - last_pedal_mm_) * i / substeps;
        const double angle = mm * to_angle;

        const double sea_cmd = sea_ctrl_.step(sea_ref, sea_, tick_);
        const double dyno_cmd = dyno_ctrl_.step(dyno_ref, dyno_, tick_ + dyno_phase_offset_);
        out.saturated = out.saturated || sea_ctrl_.saturated() || dyno_ctrl_.saturated();

        sea_ = step_plant_driven(sea_, sea_cmd, angle, velocity, kBaseDt, plant_);
        dyno_ = step_plant_driven(dyno_, dyno_cmd, angle, velocity, kBaseDt, plant_);
        ++tick_;
    }
    last_pedal_mm_ = pedal_mm;
    out.sea_force = pedal_force(sea_, plant_);
    out.dyno_force = pedal_force(dyno_, plant_);
    return out;
}

} // namespace regenfeel::sea
