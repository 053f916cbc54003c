#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

// Series-elastic pedal actuator model and its cascaded force controller.
//
// Sign convention: angles and torques are positive in the direction the
// actuator pushes the pedal back toward the driver. Pressing the pedal drives
// output_angle negative; a positive estimated torque is felt as resistance.

namespace regenfeel::sea {

inline constexpr int kBaseRateHz = 5000;
inline constexpr int kInnerDivider = 2;   // 2.5 kHz velocity loop
inline constexpr int kOuterDivider = 5;   // 1 kHz torque loop
inline constexpr double kBaseDt = 1.0 / kBaseRateHz;

class NumericalFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SeaPlantParams {
    double motor_inertia = 0.02;    // kg m^2, reflected to the spring side of the reduction
    double motor_damping = 0.05;    // N m s/rad, reflected
    double spring_stiffness = 150.0; // N m/rad
    double gear_ratio = 10.0;
    double capstan_ratio = 4.0;
    double lever_arm = 0.20;        // m
    double motor_torque_max = 1.0;  // N m, continuous, at the motor shaft
    double pedal_force_max = 200.0; // N
    double pedal_inertia = 0.01;    // kg m^2, pedal arm about its pivot

    [[nodiscard]] double reduction() const noexcept { return gear_ratio * capstan_ratio; }
    void validate() const;
};

struct SeaState {
    double motor_angle = 0.0;       // rad, motor shaft
    double motor_velocity = 0.0;    // rad/s, motor shaft
    double output_angle = 0.0;      // rad, pedal
    double output_velocity = 0.0;   // rad/s, pedal
    double spring_deflection = 0.0; // rad
    double estimated_torque = 0.0;  // N m
};

/// Free pedal: both inertias integrated, foot force (N, pressing positive)
/// applied at the lever arm. Motor torque is clamped to the motor limit.
[[nodiscard]] SeaState step_plant(const SeaState& state,
                                  double motor_torque,
                                  double pedal_force_ext,
                                  double dt,
                                  const SeaPlantParams& p);

/// Pedal motion imposed from outside (a stiff foot, or a locked output).
[[nodiscard]] SeaState step_plant_driven(const SeaState& state,
                                         double motor_torque,
                                         double output_angle,
                                         double output_velocity,
                                         double dt,
                                         const SeaPlantParams& p);

[[nodiscard]] inline double pedal_force(const SeaState& s, const SeaPlantParams& p) noexcept
{
    return s.estimated_torque / p.lever_arm;
}

[[nodiscard]] inline double pedal_displacement_mm(const SeaState& s, const SeaPlantParams& p) noexcept
{
    return -s.output_angle * p.lever_arm * 1000.0;
}

/// Mechanical energy stored in the device (kinetic + spring), in J.
[[nodiscard]] double stored_energy(const SeaState& s, const SeaPlantParams& p) noexcept;

struct CascadedGains {
    double torque_kp = 0.55;          // (rad/s) per N m, outer loop
    double torque_ki = 20.0;          // (rad/s) per N m s
    double velocity_kp = 0.22;        // motor N m per rad/s (spring-side velocity)
    double velocity_ki = 20.0;        // motor N m per rad
    double velocity_ref_limit = 40.0; // rad/s, spring side
    bool output_velocity_feedforward = true;

    void validate() const;
};

/// Multi-rate cascaded PI: torque loop every kOuterDivider base ticks,
/// velocity loop every kInnerDivider base ticks; outputs held in between.
class CascadedForceController {
public:
    CascadedForceController(CascadedGains gains, SeaPlantParams plant);

    /// Motor torque command (N m) for this base tick.
    double step(double ref_force, const SeaState& state, std::uint64_t tick);

    void reset();

    [[nodiscard]] double velocity_reference() const noexcept { return velocity_ref_; }
    [[nodiscard]] double command() const noexcept { return command_; }
    [[nodiscard]] bool saturated() const noexcept { return saturated_; }
    [[nodiscard]] const CascadedGains& gains() const noexcept { return gains_; }

private:
    CascadedGains gains_;
    SeaPlantParams plant_;
    double torque_integral_ = 0.0;
    double velocity_integral_ = 0.0;
    double velocity_ref_ = 0.0;
    double command_ = 0.0;
    bool saturated_ = false;
};

struct RigSample {
    double sea_force = 0.0;   // N, SEA spring force on the pedal
    double dyno_force = 0.0;  // N, dynamometer spring force on the pedal
    bool saturated = false;   // any motor command hit its limit this tick

    [[nodiscard]] double felt() const noexcept { return sea_force + dyno_force; }
};

/// SEA brake pedal and dynamometer rigidly coupled to one pedal whose stroke
/// is imposed by the driver's foot. Each device has its own controller; the
/// dynamometer's schedule may be shifted by a number of base ticks.
class PedalRig {
public:
    PedalRig(SeaPlantParams plant, CascadedGains gains, unsigned dyno_phase_offset = 0);

    /// Advances one world tick (world_dt must be a whole number of base
    /// ticks), interpolating pedal stroke linearly from the previous call.
    RigSample advance(double pedal_mm, double sea_ref, double dyno_ref, double world_dt);

    void reset();

    [[nodiscard]] const SeaState& sea_state() const noexcept { return sea_; }
    [[nodiscard]] const SeaState& dyno_state() const noexcept { return dyno_; }
    [[nodiscard]] std::uint64_t base_tick() const noexcept { return tick_; }

private:
    SeaPlantParams plant_;
    CascadedForceController sea_ctrl_;
    CascadedForceController dyno_ctrl_;
    unsigned dyno_phase_offset_;
    SeaState sea_;
    SeaState dyno_;
    double last_pedal_mm_ = 0.0;
    std::uint64_t tick_ = 0;
};

} // namespace regenfeel::sea
