#include "regenfeel/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace regenfeel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads members out of one JSON object and rejects any it was not asked for.
class Section {
public:
    Section(const json& obj, std::string path)
        : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            throw std::invalid_argument(path_ + " must be an object");
        }
    }

    template <typename T>
    void read(const char* key, T& target)
    {
        seen_.insert(key);
        if (auto it = obj_.find(key); it != obj_.end()) {
            try {
                target = it->template get<T>();
            } catch (const json::exception&) {
                throw std::invalid_argument(path_ + "." + key + " has the wrong type");
            }
        }
    }

    template <typename T>
    void read_optional(const char* key, std::optional<T>& target)
    {
        seen_.insert(key);
        if (auto it = obj_.find(key); it != obj_.end() && !it->is_null()) {
            T value{};
            read(key, value);
            target = value;
        }
    }

    [[nodiscard]] const json* child(const char* key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (const auto& item : obj_.items()) {
            if (!seen_.contains(item.key())) {
                throw std::invalid_argument("unknown key " + path_ + "." + item.key());
            }
        }
    }

    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Fn>
void with_section(Section& parent, const char* key, Fn&& fn)
{
    if (const json* obj = parent.child(key)) {
        Section s(*obj, parent.path() + "." + key);
        fn(s);
        s.finish();
    }
}

drivers::PedalScript parse_script(const json& j)
{
    if (!j.is_array()) {
        throw std::invalid_argument("driver.script must be an array of knots");
    }
    drivers::PedalScript script;
    for (const auto& k : j) {
        Section s(k, "driver.script[]");
        drivers::ScriptKnot knot;
        s.read("t", knot.t);
        s.read("throttle", knot.throttle);
        s.read("brake_x", knot.brake_x);
        s.finish();
        script.knots.push_back(knot);
    }
    return script;
}

DriverKind parse_driver_kind(const std::string& s)
{
    if (s == "follower") return DriverKind::Follower;
    if (s == "script") return DriverKind::Script;
    if (s == "human") return DriverKind::Human;
    throw std::invalid_argument("driver.kind must be follower, script or human");
}

const char* driver_kind_name(DriverKind k)
{
    switch (k) {
    case DriverKind::Follower: return "follower";
    case DriverKind::Script: return "script";
    case DriverKind::Human: return "human";
    }
    return "follower";
}

} // namespace

void ExperimentConfig::validate() const
{
    map.validate();
    one_pedal.validate();
    throttle_pedal.validate();
    plant.validate();
    gains.validate();
    scenario.validate();
    vehicle.validate();
    driver.follower.validate();
    if (driver.kind == DriverKind::Script) {
        if (!driver.script) {
            throw std::invalid_argument("driver.kind 'script' requires driver.script");
        }
        driver.script->validate();
    }
    if (!(run.world_rate_hz > 0.0)) {
        throw std::invalid_argument("run.world_rate_hz must be positive");
    }
    const double ratio = sea::kBaseRateHz / run.world_rate_hz;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
        throw std::invalid_argument("run.world_rate_hz must divide the 5 kHz SEA base rate");
    }
    if (!(run.frame_rate_hz > 0.0 && run.frame_rate_hz <= run.world_rate_hz)) {
        throw std::invalid_argument("run.frame_rate_hz must be in (0, world_rate_hz]");
    }
    if (!(run.max_duration > 0.0)) {
        throw std::invalid_argument("run.max_duration must be positive");
    }
    if (run.duration && !(*run.duration > 0.0)) {
        throw std::invalid_argument("run.duration must be positive");
    }
    if (!(run.initial_speed >= 0.0 && run.initial_speed <= scenario.target_speed)) {
        throw std::invalid_argument("run.initial_speed must lie in [0, scenario.target_speed]");
    }
    if (!(metrics.hard_braking.threshold > 0.0 && metrics.hard_braking.min_gap >= 0.0 &&
          metrics.reference_gap > 0.0 && metrics.throttle_eps >= 0.0)) {
        throw std::invalid_argument("metrics parameters are invalid");
    }
}

ExperimentConfig config_from_json(std::string_view text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig c;
    Section top(root, "config");

    int version = 0;
    top.read("schema_version", version);
    if (version != kSchemaVersion) {
        throw std::invalid_argument("config.schema_version must be " + std::to_string(kSchemaVersion));
    }

    with_section(top, "map", [&](Section& s) {
        s.read("gravity", c.map.gravity);
        s.read("vehicle_mass", c.map.vehicle_mass);
        s.read("regen_power", c.map.regen_power);
        s.read("v_low_cut", c.map.v_low_cut);
        s.read("v_high_cut", c.map.v_high_cut);
        s.read("ramp_width", c.map.ramp_width);
        s.read_optional("force_feel_upper_slope", c.map.force_feel_upper_slope);
    });
    with_section(top, "one_pedal", [&](Section& s) {
        s.read("regen_decel_cap_g", c.one_pedal.regen_decel_cap_g);
        s.read("throttle_release_start", c.one_pedal.throttle_release_start);
        s.read("throttle_release_full", c.one_pedal.throttle_release_full);
        s.read("regen_slew", c.one_pedal.regen_slew);
        s.read("use_residual_regen", c.one_pedal.use_residual_regen);
    });
    with_section(top, "throttle_pedal", [&](Section& s) {
        s.read("preload", c.throttle_pedal.preload);
        s.read("stiffness", c.throttle_pedal.stiffness);
        s.read("force_max", c.throttle_pedal.force_max);
    });
    with_section(top, "sea", [&](Section& sea) {
        with_section(sea, "plant", [&](Section& s) {
            s.read("motor_inertia", c.plant.motor_inertia);
            s.read("motor_damping", c.plant.motor_damping);
            s.read("spring_stiffness", c.plant.spring_stiffness);
            s.read("gear_ratio", c.plant.gear_ratio);
            s.read("capstan_ratio", c.plant.capstan_ratio);
            s.read("lever_arm", c.plant.lever_arm);
            s.read("motor_torque_max", c.plant.motor_torque_max);
            s.read("pedal_force_max", c.plant.pedal_force_max);
            s.read("pedal_inertia", c.plant.pedal_inertia);
        });
        with_section(sea, "gains", [&](Section& s) {
            s.read("torque_kp", c.gains.torque_kp);
            s.read("torque_ki", c.gains.torque_ki);
            s.read("velocity_kp", c.gains.velocity_kp);
            s.read("velocity_ki", c.gains.velocity_ki);
            s.read("velocity_ref_limit", c.gains.velocity_ref_limit);
            s.read("output_velocity_feedforward", c.gains.output_velocity_feedforward);
        });
        sea.read("dyno_phase_offset", c.dyno_phase_offset);
    });
    with_section(top, "scenario", [&](Section& s) {
        s.read("target_speed", c.scenario.target_speed);
        s.read("accel_g", c.scenario.accel_g);
        s.read("road_length", c.scenario.road_length);
        s.read("stretch_bounds", c.scenario.stretch_bounds);
        s.read("event_decel_g", c.scenario.event_decel_g);
        s.read("stop_wait_min", c.scenario.stop_wait_min);
        s.read("stop_wait_max", c.scenario.stop_wait_max);
        s.read("final_decel_g", c.scenario.final_decel_g);
        s.read("initial_gap", c.scenario.initial_gap);
    });
    with_section(top, "vehicle", [&](Section& s) {
        s.read("accel_max_g", c.vehicle.accel_max_g);
        s.read("derate_start", c.vehicle.derate_start);
        s.read("derate_end", c.vehicle.derate_end);
        s.read("drag_coefficient", c.vehicle.drag_coefficient);
    });
    with_section(top, "driver", [&](Section& d) {
        std::string kind = driver_kind_name(c.driver.kind);
        d.read("kind", kind);
        c.driver.kind = parse_driver_kind(kind);
        with_section(d, "follower", [&](Section& s) {
            auto& f = c.driver.follower;
            s.read("target_gap", f.target_gap);
            s.read("kp_gap", f.kp_gap);
            s.read("kd_gap", f.kd_gap);
            s.read("reaction_delay", f.reaction_delay);
            s.read("brake_rate_limit", f.brake_rate_limit);
            s.read("throttle_rate_limit", f.throttle_rate_limit);
            s.read("coast_band", f.coast_band);
            s.read("exclusion_guard", f.guard.enabled);
        });
        if (const json* script = d.child("script")) {
            c.driver.script = parse_script(*script);
        }
    });

    std::string condition = blend::to_string(c.condition);
    top.read("condition", condition);
    c.condition = blend::parse_condition(condition);

    double hard_braking_g = 0.5;
    with_section(top, "metrics", [&](Section& s) {
        s.read("hard_braking_g", hard_braking_g);
        s.read("hard_braking_min_gap", c.metrics.hard_braking.min_gap);
        s.read("reference_gap", c.metrics.reference_gap);
        s.read("throttle_eps", c.metrics.throttle_eps);
    });
    c.metrics.hard_braking.threshold = hard_braking_g * c.map.gravity;

    with_section(top, "run", [&](Section& s) {
        s.read("world_rate_hz", c.run.world_rate_hz);
        s.read("frame_rate_hz", c.run.frame_rate_hz);
        s.read("max_duration", c.run.max_duration);
        s.read_optional("duration", c.run.duration);
        s.read("initial_speed", c.run.initial_speed);
        s.read("seeds", c.run.seeds);
        s.read("output_dir", c.run.output_dir);
    });
    top.finish();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw std::invalid_argument("cannot open config " + path);
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& c)
{
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    auto& map = j["map"];
    map["gravity"] = c.map.gravity;
    map["vehicle_mass"] = c.map.vehicle_mass;
    map["regen_power"] = c.map.regen_power;
    map["v_low_cut"] = c.map.v_low_cut;
    map["v_high_cut"] = c.map.v_high_cut;
    map["ramp_width"] = c.map.ramp_width;
    if (c.map.force_feel_upper_slope) {
        map["force_feel_upper_slope"] = *c.map.force_feel_upper_slope;
    }
    j["one_pedal"] = {{"regen_decel_cap_g", c.one_pedal.regen_decel_cap_g},
                      {"throttle_release_start", c.one_pedal.throttle_release_start},
                      {"throttle_release_full", c.one_pedal.throttle_release_full},
                      {"regen_slew", c.one_pedal.regen_slew},
                      {"use_residual_regen", c.one_pedal.use_residual_regen}};
    j["throttle_pedal"] = {{"preload", c.throttle_pedal.preload},
                           {"stiffness", c.throttle_pedal.stiffness},
                           {"force_max", c.throttle_pedal.force_max}};
    auto& sea = j["sea"];
    sea["plant"] = {{"motor_inertia", c.plant.motor_inertia},
                    {"motor_damping", c.plant.motor_damping},
                    {"spring_stiffness", c.plant.spring_stiffness},
                    {"gear_ratio", c.plant.gear_ratio},
                    {"capstan_ratio", c.plant.capstan_ratio},
                    {"lever_arm", c.plant.lever_arm},
                    {"motor_torque_max", c.plant.motor_torque_max},
                    {"pedal_force_max", c.plant.pedal_force_max},
                    {"pedal_inertia", c.plant.pedal_inertia}};
    sea["gains"] = {{"torque_kp", c.gains.torque_kp},
                    {"torque_ki", c.gains.torque_ki},
                    {"velocity_kp", c.gains.velocity_kp},
                    {"velocity_ki", c.gains.velocity_ki},
                    {"velocity_ref_limit", c.gains.velocity_ref_limit},
                    {"output_velocity_feedforward", c.gains.output_velocity_feedforward}};
    sea["dyno_phase_offset"] = c.dyno_phase_offset;
    j["scenario"] = {{"target_speed", c.scenario.target_speed},
                     {"accel_g", c.scenario.accel_g},
                     {"road_length", c.scenario.road_length},
                     {"stretch_bounds", c.scenario.stretch_bounds},
                     {"event_decel_g", c.scenario.event_decel_g},
                     {"stop_wait_min", c.scenario.stop_wait_min},
                     {"stop_wait_max", c.scenario.stop_wait_max},
                     {"final_decel_g", c.scenario.final_decel_g},
                     {"initial_gap", c.scenario.initial_gap}};
    j["vehicle"] = {{"accel_max_g", c.vehicle.accel_max_g},
                    {"derate_start", c.vehicle.derate_start},
                    {"derate_end", c.vehicle.derate_end},
                    {"drag_coefficient", c.vehicle.drag_coefficient}};
    auto& driver = j["driver"];
    driver["kind"] = driver_kind_name(c.driver.kind);
    const auto& f = c.driver.follower;
    driver["follower"] = {{"target_gap", f.target_gap},
                          {"kp_gap", f.kp_gap},
                          {"kd_gap", f.kd_gap},
                          {"reaction_delay", f.reaction_delay},
                          {"brake_rate_limit", f.brake_rate_limit},
                          {"throttle_rate_limit", f.throttle_rate_limit},
                          {"coast_band", f.coast_band},
                          {"exclusion_guard", f.guard.enabled}};
    if (c.driver.script) {
        auto& knots = driver["script"] = ordered_json::array();
        for (const auto& k : c.driver.script->knots) {
            knots.push_back({{"t", k.t}, {"throttle", k.throttle}, {"brake_x", k.brake_x}});
        }
    }
    j["condition"] = blend::to_string(c.condition);
    j["metrics"] = {{"hard_braking_g", c.metrics.hard_braking.threshold / c.map.gravity},
                    {"hard_braking_min_gap", c.metrics.hard_braking.min_gap},
                    {"reference_gap", c.metrics.reference_gap},
                    {"throttle_eps", c.metrics.throttle_eps}};
    auto& run = j["run"];
    run["world_rate_hz"] = c.run.world_rate_hz;
    run["frame_rate_hz"] = c.run.frame_rate_hz;
    run["max_duration"] = c.run.max_duration;
    if (c.run.duration) {
        run["duration"] = *c.run.duration;
    }
    run["initial_speed"] = c.run.initial_speed;
    run["seeds"] = c.run.seeds;
    run["output_dir"] = c.run.output_dir;
    return j.dump(2);
}

} // namespace regenfeel
