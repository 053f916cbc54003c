#include "regenfeel/vehicle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace regenfeel::world {

namespace {

// mt19937_64's output sequence is fixed by the standard; the std
// distributions are not, so map to [0, 1) by hand.
double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

void ScenarioParams::validate() const
{
    if (!(target_speed > 0.0 && accel_g > 0.0 && road_length > 0.0 && final_decel_g > 0.0)) {
        throw std::invalid_argument("scenario speeds, accelerations and lengths must be positive");
    }
    if (stretch_bounds.size() != event_decel_g.size() + 1) {
        throw std::invalid_argument("scenario needs one stretch per deceleration event");
    }
    if (!std::is_sorted(stretch_bounds.begin(), stretch_bounds.end()) ||
        std::adjacent_find(stretch_bounds.begin(), stretch_bounds.end()) != stretch_bounds.end()) {
        throw std::invalid_argument("scenario.stretch_bounds must be strictly increasing");
    }
    if (stretch_bounds.front() < 0.0 || stretch_bounds.back() > road_length) {
        throw std::invalid_argument("scenario.stretch_bounds must lie on the road");
    }
    for (double d : event_decel_g) {
        if (!(d > 0.0)) {
            throw std::invalid_argument("scenario.event_decel_g entries must be positive");
        }
    }
    if (!(stop_wait_min >= 0.0 && stop_wait_max >= stop_wait_min)) {
        throw std::invalid_argument("scenario stop wait range is invalid");
    }
    if (!(initial_gap >= 0.0)) {
        throw std::invalid_argument("scenario.initial_gap must be non-negative");
    }
}

LeadSchedule generate_lead_schedule(std::uint64_t seed, const ScenarioParams& params, double gravity)
{
    params.validate();
    std::mt19937_64 rng(seed);

    LeadSchedule s;
    s.seed = seed;
    s.target_speed = params.target_speed;
    s.accel = params.accel_g * gravity;
    s.final_decel = params.final_decel_g * gravity;
    s.road_length = params.road_length;
    for (std::size_t i = 0; i < params.event_decel_g.size(); ++i) {
        const double lo = params.stretch_bounds[i];
        const double hi = params.stretch_bounds[i + 1];
        LeadEvent e;
        e.trigger_position = lo + (hi - lo) * unit_uniform(rng);
        e.decel = params.event_decel_g[i] * gravity;
        e.stop_wait = params.stop_wait_min +
                      (params.stop_wait_max - params.stop_wait_min) * unit_uniform(rng);
        s.events.push_back(e);
    }
    return s;
}

std::string schedule_to_json(const LeadSchedule& schedule)
{
    nlohmann::ordered_json j;
    j["seed"] = schedule.seed;
    j["target_speed"] = schedule.target_speed;
    j["accel"] = schedule.accel;
    j["final_decel"] = schedule.final_decel;
    j["road_length"] = schedule.road_length;
    j["events"] = nlohmann::ordered_json::array();
    for (const auto& e : schedule.events) {
        j["events"].push_back({{"trigger_position", e.trigger_position},
                               {"decel", e.decel},
                               {"stop_wait", e.stop_wait}});
    }
    return j.dump(2);
}

const char* to_string(LeadPhase phase)
{
    switch (phase) {
    case LeadPhase::Accelerate: return "accelerate";
    case LeadPhase::Cruise: return "cruise";
    case LeadPhase::Decelerate: return "decelerate";
    case LeadPhase::Wait: return "wait";
    case LeadPhase::FinalBrake: return "final_brake";
    case LeadPhase::Stopped: return "stopped";
    }
    return "unknown";
}

LeadState step_lead(const LeadState& state, const LeadSchedule& schedule, double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    LeadState s = state;
    const double v = s.vehicle.velocity;
    const double remaining = schedule.road_length - s.vehicle.position;

    // Transitions out of the driving phases.
    if (s.phase == LeadPhase::Accelerate || s.phase == LeadPhase::Cruise) {
        if (remaining <= v * v / (2.0 * schedule.final_decel) + v * dt) {
            s.phase = LeadPhase::FinalBrake;
        } else if (s.next_event < schedule.events.size() &&
                   s.vehicle.position >= schedule.events[s.next_event].trigger_position) {
            s.active_event = s.next_event++;
            s.phase = LeadPhase::Decelerate;
        }
    }

    double accel = 0.0;
    switch (s.phase) {
    case LeadPhase::Accelerate:
        accel = schedule.accel;
        break;
    case LeadPhase::Cruise:
        break;
    case LeadPhase::Decelerate:
        accel = -schedule.events[s.active_event].decel;
        break;
    case LeadPhase::Wait:
        s.wait_remaining -= dt;
        if (s.wait_remaining <= 0.0) {
            s.wait_remaining = 0.0;
            s.phase = remaining > 0.0 ? LeadPhase::Accelerate : LeadPhase::Stopped;
        }
        break;
    case LeadPhase::FinalBrake:
        accel = remaining > 1e-9 ? -(v * v) / (2.0 * remaining) : -schedule.final_decel;
        break;
    case LeadPhase::Stopped:
        break;
    }

    double v_next = std::clamp(v + accel * dt, 0.0, schedule.target_speed);
    if (s.phase == LeadPhase::Stopped) {
        v_next = 0.0;
    }
    if (s.phase == LeadPhase::Accelerate && v_next >= schedule.target_speed) {
        s.phase = LeadPhase::Cruise;
    }
    if (v_next == 0.0 && v > 0.0) {
        if (s.phase == LeadPhase::Decelerate) {
            s.phase = LeadPhase::Wait;
            s.wait_remaining = schedule.events[s.active_event].stop_wait;
        } else if (s.phase == LeadPhase::FinalBrake) {
            s.phase = LeadPhase::Stopped;
        }
    }

    s.vehicle.acceleration = (v_next - v) / dt;
    s.vehicle.velocity = v_next;
    s.vehicle.position += v_next * dt;
    return s;
}

void FollowerParams::validate() const
{
    if (!(accel_max_g > 0.0 && derate_start > 0.0 && derate_end > derate_start &&
          drag_coefficient >= 0.0)) {
        throw std::invalid_argument("follower parameters are invalid");
    }
}

double throttle_to_traction(double throttle,
                            double speed,
                            const maps::MapParams& p,
                            const FollowerParams& fp)
{
    if (!(throttle >= 0.0 && throttle <= 1.0)) {
        throw std::domain_error("throttle must lie in [0, 1]");
    }
    const double derate = std::clamp((fp.derate_end - speed) / (fp.derate_end - fp.derate_start),
                                     0.0, 1.0);
    return throttle * p.vehicle_mass * fp.accel_max_g * p.gravity * derate;
}

VehicleState step_follower(const VehicleState& state,
                           double traction,
                           const blend::BlendCommand& cmd,
                           const maps::MapParams& p,
                           double dt,
                           const FollowerParams& fp)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (!std::isfinite(traction) || !std::isfinite(cmd.regen) || !std::isfinite(cmd.friction)) {
        throw std::domain_error("follower forces must be finite");
    }
    const double v = state.velocity;
    const double drag = fp.drag_coefficient * v * v;
    const double accel = (traction - cmd.regen - cmd.friction - drag) / p.vehicle_mass;
    const double v_next = std::max(0.0, v + accel * dt);

    VehicleState out;
    out.acceleration = (v_next - v) / dt;
    out.velocity = v_next;
    out.position = state.position + v_next * dt;
    return out;
}

WorldState initial_world(const ScenarioParams& params)
{
    WorldState w;
    w.gap = params.initial_gap;
    return w;
}

} // namespace regenfeel::world
