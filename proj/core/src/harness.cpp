#include "regenfeel/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace regenfeel::harness {

namespace {

std::string dump_row(const telemetry::TraceRow& row)
{
    nlohmann::ordered_json j;
    const auto values = telemetry::row_values(row);
    const auto& names = telemetry::column_names();
    for (std::size_t i = 0; i < values.size(); ++i) {
        j[std::string(names[i])] = values[i];
    }
    return j.dump();
}

void check_row_finite(const telemetry::TraceRow& row)
{
    for (double v : telemetry::row_values(row)) {
        if (!std::isfinite(v)) {
            throw sea::NumericalFault("non-finite simulation state: " + dump_row(row));
        }
    }
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    os << text << '\n';
}

MetricStats stats(const std::vector<double>& xs)
{
    MetricStats s;
    if (xs.empty()) {
        return s;
    }
    const double n = static_cast<double>(xs.size());
    for (double x : xs) {
        s.mean += x;
    }
    s.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

} // namespace

TrialRunner::TrialRunner(ExperimentConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      schedule_(world::generate_lead_schedule(seed, config_.scenario, config_.map.gravity)),
      world_(world::initial_world(config_.scenario)),
      rig_(config_.plant, config_.gains, config_.dyno_phase_offset)
{
    config_.validate();
    world_.lead.vehicle.velocity = config_.run.initial_speed;
    world_.follower.velocity = config_.run.initial_speed;
    if (config_.run.initial_speed >= config_.scenario.target_speed) {
        world_.lead.phase = world::LeadPhase::Cruise;
    }
    if (config_.driver.kind == DriverKind::Follower) {
        follower_ = std::make_unique<drivers::FollowerDriver>(
            config_.driver.follower, config_.condition.pedal_mode, config_.map,
            config_.one_pedal, config_.vehicle, config_.run.dt());
    }
    const double expected = std::min(config_.run.max_duration,
                                     config_.run.duration.value_or(config_.run.max_duration));
    trace_.dt = config_.run.dt();
    trace_.rows.reserve(static_cast<std::size_t>(expected * config_.run.world_rate_hz) + 1);
}

TrialRunner::~TrialRunner() = default;
TrialRunner::TrialRunner(TrialRunner&&) noexcept = default;
TrialRunner& TrialRunner::operator=(TrialRunner&&) noexcept = default;

double TrialRunner::time() const noexcept
{
    return static_cast<double>(tick_) * config_.run.dt();
}

double TrialRunner::time_bound() const
{
    const auto& sc = config_.scenario;
    const double g = config_.map.gravity;
    const double cruise = sc.road_length / sc.target_speed;
    const double accel = sc.target_speed / (sc.accel_g * g);
    double per_event = 0.0;
    for (double d : sc.event_decel_g) {
        per_event += accel + sc.target_speed / (d * g) + sc.stop_wait_max;
    }
    const double final_stop = sc.target_speed / (sc.final_decel_g * g);
    return cruise + accel + per_event + final_stop + 60.0;
}

drivers::PedalInputs TrialRunner::model_inputs()
{
    switch (config_.driver.kind) {
    case DriverKind::Follower:
        return follower_->step(world_);
    case DriverKind::Script:
        return drivers::scripted_inputs(time(), *config_.driver.script);
    case DriverKind::Human:
        break;
    }
    throw std::logic_error("human-driven trials take pedal inputs from the live session");
}

const telemetry::TraceRow& TrialRunner::step(const drivers::PedalInputs& inputs)
{
    drivers::validate(inputs);
    const double dt = config_.run.dt();
    const auto& map = config_.map;
    const auto brake = maps::PedalDisplacement(inputs.brake_x);
    const bool touched = inputs.brake_x > 0.0;
    const double speed = world_.follower.velocity;

    const blend::BlendCommand cmd =
        config_.condition.pedal_mode == blend::PedalMode::TwoPedal
            ? blend::distribute_two_pedal(brake, speed, map)
            : blend::distribute_one_pedal(inputs.throttle, brake, speed, map, config_.one_pedal,
                                          prev_cmd_, dt);
    prev_cmd_ = cmd;
    const double traction = world::throttle_to_traction(inputs.throttle, speed, map, config_.vehicle);

    blend::HapticTargets targets = blend::compensation_targets(
        cmd, brake, touched, config_.condition, map, config_.plant.pedal_force_max);
    targets.throttle_force = blend::throttle_pedal_force(inputs.throttle, config_.throttle_pedal);

    const sea::RigSample rig = rig_.advance(inputs.brake_x, targets.sea_force, targets.dyno_force, dt);

    world_.follower = world::step_follower(world_.follower, traction, cmd, map, dt, config_.vehicle);
    world_.lead = world::step_lead(world_.lead, schedule_, dt);
    ++tick_;
    world_.t = time();
    world_.gap = world_.lead.vehicle.position + config_.scenario.initial_gap -
                 world_.follower.position;
    world_.collision = world_.gap < 0.0;
    world_.lead_stopped = world_.lead.phase == world::LeadPhase::Stopped;

    telemetry::TraceRow row;
    row.t = world_.t;
    row.lead_position = world_.lead.vehicle.position;
    row.lead_velocity = world_.lead.vehicle.velocity;
    row.lead_acceleration = world_.lead.vehicle.acceleration;
    row.follower_position = world_.follower.position;
    row.follower_velocity = world_.follower.velocity;
    row.follower_acceleration = world_.follower.acceleration;
    row.gap = world_.gap;
    row.throttle = inputs.throttle;
    row.brake_x = inputs.brake_x;
    row.F_reg = cmd.regen;
    row.F_fric = cmd.friction;
    row.a_demand = cmd.accel_demand;
    row.F_sea_ref = targets.sea_force;
    row.F_sea_actual = rig.sea_force;
    row.F_dyno_ref = targets.dyno_force;
    row.F_dyno_actual = rig.dyno_force;
    row.F_pedal_felt = rig.felt();
    row.F_throttle = targets.throttle_force;
    row.P_regen = cmd.regen * world_.follower.velocity;
    row.saturated = rig.saturated;
    row.collision = world_.collision;
    check_row_finite(row);
    trace_.rows.push_back(row);

    if (config_.run.duration) {
        done_ = world_.t >= *config_.run.duration - 0.5 * dt;
    } else {
        done_ = world_.lead_stopped && world_.follower.velocity == 0.0;
    }
    if (!done_ && world_.t >= config_.run.max_duration - 0.5 * dt) {
        done_ = true;
        timed_out_ = true;
    }
    world_.done = done_;
    return trace_.rows.back();
}

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed)
{
    TrialRunner runner(config, seed);
    while (!runner.done()) {
        runner.step(runner.model_inputs());
    }
    TrialResult result;
    result.schedule = runner.schedule();
    result.timed_out = runner.timed_out();
    result.trace = runner.take_trace();
    result.metrics = telemetry::compute_metrics(result.trace, config.metrics);
    return result;
}

void write_trial_outputs(const std::string& dir,
                         const ExperimentConfig& config,
                         std::uint64_t seed,
                         const TrialResult& result)
{
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);
    telemetry::write_trace_csv((root / "trace.csv").string(), result.trace);

    nlohmann::ordered_json sidecar;
    sidecar["seed"] = seed;
    sidecar["condition"] = blend::to_string(config.condition);
    sidecar["timed_out"] = result.timed_out;
    sidecar["rows"] = result.trace.size();
    sidecar["dt"] = result.trace.dt;
    sidecar["config"] = nlohmann::ordered_json::parse(config_to_json(config));
    write_file(root / "trace.json", sidecar.dump(2));
    write_file(root / "metrics.json", telemetry::metrics_to_json(result.metrics));
    write_file(root / "schedule.json", world::schedule_to_json(result.schedule));
}

std::vector<blend::DriveCondition> all_conditions()
{
    using blend::Compensation;
    using blend::PedalMode;
    return {{PedalMode::TwoPedal, Compensation::Off},
            {PedalMode::TwoPedal, Compensation::On},
            {PedalMode::OnePedal, Compensation::Off},
            {PedalMode::OnePedal, Compensation::On}};
}

BatchResult run_batch(const ExperimentConfig& config,
                      const std::vector<blend::DriveCondition>& conditions,
                      const std::vector<std::uint64_t>& seeds,
                      const BatchOptions& opts)
{
    if (conditions.empty() || seeds.empty()) {
        throw std::invalid_argument("batch needs at least one condition and one seed");
    }

    BatchResult result;
    for (const auto& c : conditions) {
        for (auto seed : seeds) {
            BatchRow row;
            row.condition = c;
            row.seed = seed;
            result.rows.push_back(row);
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < result.rows.size(); i = next++) {
            BatchRow& row = result.rows[i];
            try {
                ExperimentConfig trial = config;
                trial.condition = row.condition;
                TrialResult r = run_trial(trial, row.seed);
                row.metrics = r.metrics;
                row.schedule = r.schedule;
                if (opts.trace_dir) {
                    const auto dir = std::filesystem::path(*opts.trace_dir) /
                                     blend::to_string(row.condition) /
                                     ("seed_" + std::to_string(row.seed));
                    std::lock_guard lock(io_mutex);
                    write_trial_outputs(dir.string(), trial, row.seed, r);
                }
            } catch (const std::exception& e) {
                row.error = e.what();
                row.schedule = world::generate_lead_schedule(row.seed, config.scenario,
                                                             config.map.gravity);
            }
        }
    };

    unsigned jobs = opts.jobs != 0 ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, result.rows.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < jobs; ++i) {
            pool.emplace_back(worker);
        }
        worker();
    }

    for (const auto& c : conditions) {
        BatchSummary s;
        s.condition = c;
        std::vector<double> hb, rmse, energy, throttle, collisions;
        for (const auto& row : result.rows) {
            if (!(row.condition == c)) {
                continue;
            }
            ++s.trials;
            if (!row.metrics) {
                ++s.failures;
                continue;
            }
            hb.push_back(row.metrics->hard_braking_count);
            rmse.push_back(row.metrics->pct_rmse_gap);
            energy.push_back(row.metrics->regen_energy);
            throttle.push_back(row.metrics->pct_throttle_use);
            collisions.push_back(row.metrics->collision_count);
        }
        s.hard_braking_count = stats(hb);
        s.pct_rmse_gap = stats(rmse);
        s.regen_energy = stats(energy);
        s.pct_throttle_use = stats(throttle);
        s.collision_count = stats(collisions);
        result.summary.push_back(s);
    }
    return result;
}

void write_batch_csv(std::ostream& os, const BatchResult& result)
{
    using telemetry::format_double;
    os << "kind,condition,seed,hard_braking_count,pct_rmse_gap,regen_energy,pct_throttle_use,"
          "collision_count,error\n";
    for (const auto& r : result.rows) {
        os << "trial," << blend::to_string(r.condition) << ',' << r.seed << ',';
        if (r.metrics) {
            os << r.metrics->hard_braking_count << ',' << format_double(r.metrics->pct_rmse_gap)
               << ',' << format_double(r.metrics->regen_energy) << ','
               << format_double(r.metrics->pct_throttle_use) << ',' << r.metrics->collision_count
               << ",\n";
        } else {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            os << ",,,,," << msg << '\n';
        }
    }
    for (const char* which : {"mean", "sd"}) {
        const bool mean = which[0] == 'm';
        for (const auto& s : result.summary) {
            auto pick = [mean](const MetricStats& m) { return format_double(mean ? m.mean : m.sd); };
            os << which << ',' << blend::to_string(s.condition) << ',' << s.trials << ','
               << pick(s.hard_braking_count) << ',' << pick(s.pct_rmse_gap) << ','
               << pick(s.regen_energy) << ',' << pick(s.pct_throttle_use) << ','
               << pick(s.collision_count) << ',' << (s.failures ? "failures" : "") << '\n';
        }
    }
}

} // namespace regenfeel::harness
