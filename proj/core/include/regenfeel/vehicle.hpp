#pragma once

#include "regenfeel/blending.hpp"
#include "regenfeel/maps.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace regenfeel::world {

struct VehicleState {
    double position = 0.0;     // m
    double velocity = 0.0;     // m/s, never negative
    double acceleration = 0.0; // m/s^2, realised over the last step
};

struct ScenarioParams {
    double target_speed = 50.0 / 3.6; // m/s
    double accel_g = 0.2;
    double road_length = 1500.0;      // m
    std::vector<double> stretch_bounds{0.0, 500.0, 1000.0, 1500.0};
    std::vector<double> event_decel_g{0.19, 0.28, 0.39};
    double stop_wait_min = 1.0;       // s
    double stop_wait_max = 3.0;       // s
    double final_decel_g = 0.2;       // braking into the permanent stop
    double initial_gap = 15.0;        // m, follower behind lead at t = 0

    void validate() const;
};

struct LeadEvent {
    double trigger_position = 0.0; // m
    double decel = 0.0;            // m/s^2, positive magnitude
    double stop_wait = 0.0;        // s

    friend bool operator==(const LeadEvent&, const LeadEvent&) = default;
};

struct LeadSchedule {
    std::uint64_t seed = 0;
    std::vector<LeadEvent> events;
    double target_speed = 0.0; // m/s
    double accel = 0.0;        // m/s^2
    double final_decel = 0.0;  // m/s^2
    double road_length = 0.0;  // m

    friend bool operator==(const LeadSchedule&, const LeadSchedule&) = default;
};

/// Deterministic in (seed, params): one deceleration event per road stretch,
/// trigger position uniform within the stretch, wait uniform in
/// [stop_wait_min, stop_wait_max].
[[nodiscard]] LeadSchedule generate_lead_schedule(std::uint64_t seed,
                                                  const ScenarioParams& params,
                                                  double gravity);

[[nodiscard]] std::string schedule_to_json(const LeadSchedule& schedule);

enum class LeadPhase { Accelerate, Cruise, Decelerate, Wait, FinalBrake, Stopped };

[[nodiscard]] const char* to_string(LeadPhase phase);

struct LeadState {
    VehicleState vehicle;
    LeadPhase phase = LeadPhase::Accelerate;
    std::size_t next_event = 0;
    std::size_t active_event = 0;
    double wait_remaining = 0.0;
};

[[nodiscard]] LeadState step_lead(const LeadState& state, const LeadSchedule& schedule, double dt);

struct FollowerParams {
    double accel_max_g = 0.3;      // full-throttle traction
    double derate_start = 45.0;    // m/s
    double derate_end = 50.0;      // m/s, traction is zero at and above
    double drag_coefficient = 0.0; // N/(m/s)^2, optional quadratic drag

    void validate() const;
};

[[nodiscard]] double throttle_to_traction(double throttle,
                                          double speed,
                                          const maps::MapParams& p,
                                          const FollowerParams& fp = {});

[[nodiscard]] VehicleState step_follower(const VehicleState& state,
                                         double traction,
                                         const blend::BlendCommand& cmd,
                                         const maps::MapParams& p,
                                         double dt,
                                         const FollowerParams& fp = {});

struct WorldState {
    LeadState lead;
    VehicleState follower;
    double gap = 0.0; // m, may go negative (collision)
    double t = 0.0;   // s
    bool collision = false;
    bool lead_stopped = false;
    bool done = false;
};

[[nodiscard]] WorldState initial_world(const ScenarioParams& params);

} // namespace regenfeel::world
