#include "regenfeel/session.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace regenfeel::session {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

double number_field(const json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw ProtocolError(std::string("missing numeric field '") + key + "'");
    }
    return it->get<double>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed)
{
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ProtocolError("unknown field '" + key + "'");
        }
    }
}

ordered metrics_object(const telemetry::TrialMetrics& m)
{
    return ordered::parse(telemetry::metrics_to_json(m));
}

} // namespace

ClientMessage parse_client_message(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error&) {
        throw ProtocolError("frame is not valid JSON");
    }
    if (!j.is_object()) {
        throw ProtocolError("frame must be a JSON object");
    }
    const auto type_it = j.find("type");
    if (type_it == j.end() || !type_it->is_string()) {
        throw ProtocolError("missing string field 'type'");
    }
    const auto type = type_it->get<std::string>();

    if (type == "hello") {
        reject_unknown(j, {"type", "role"});
        HelloMessage m;
        if (const auto it = j.find("role"); it != j.end()) {
            if (*it == "driver") {
                m.requested = Role::Driver;
            } else if (*it == "spectator") {
                m.requested = Role::Spectator;
            } else {
                throw ProtocolError("role must be 'driver' or 'spectator'");
            }
        }
        return m;
    }
    if (type == "control") {
        reject_unknown(j, {"type", "action", "condition"});
        const auto it = j.find("action");
        if (it == j.end() || !it->is_string()) {
            throw ProtocolError("missing string field 'action'");
        }
        ControlMessage m;
        const auto action = it->get<std::string>();
        if (action == "start") {
            m.action = ControlAction::Start;
        } else if (action == "pause") {
            m.action = ControlAction::Pause;
        } else if (action == "reset") {
            m.action = ControlAction::Reset;
        } else if (action == "select") {
            m.action = ControlAction::Select;
        } else {
            throw ProtocolError("unknown control action '" + action + "'");
        }
        if (const auto c = j.find("condition"); c != j.end()) {
            if (!c->is_string()) {
                throw ProtocolError("condition must be a string");
            }
            try {
                m.condition = blend::parse_condition(c->get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ProtocolError(e.what());
            }
        }
        if (m.action == ControlAction::Select && !m.condition) {
            throw ProtocolError("select needs a condition");
        }
        return m;
    }
    if (type == "pedals") {
        reject_unknown(j, {"type", "throttle", "brake_x"});
        PedalsMessage m;
        m.inputs.throttle = number_field(j, "throttle");
        m.inputs.brake_x = number_field(j, "brake_x");
        try {
            drivers::validate(m.inputs);
        } catch (const std::exception& e) {
            throw ProtocolError(e.what());
        }
        return m;
    }
    if (type == "state" || type == "metrics" || type == "error") {
        throw ProtocolError("'" + type + "' frames are server to client only");
    }
    throw ProtocolError("unknown message type '" + type + "'");
}

std::string format_error(std::string_view message)
{
    ordered j;
    j["type"] = "error";
    j["message"] = std::string(message);
    return j.dump();
}

const char* to_string(Status s)
{
    switch (s) {
    case Status::Paused: return "paused";
    case Status::Running: return "running";
    case Status::Finished: return "finished";
    }
    return "unknown";
}

LiveSession::LiveSession(ExperimentConfig config, std::uint64_t seed, TraceSink sink)
    : config_(std::move(config)), seed_(seed), sink_(std::move(sink))
{
    config_.validate();
    const double stride = config_.run.world_rate_hz / config_.run.frame_rate_hz;
    if (std::abs(stride - std::round(stride)) > 1e-9 || stride < 1.0) {
        throw std::invalid_argument("frame rate must divide the world rate");
    }
    frame_stride_ = static_cast<std::size_t>(std::round(stride));
    restart();
}

void LiveSession::restart()
{
    runner_ = std::make_unique<harness::TrialRunner>(config_, seed_);
    held_ = {};
    status_ = Status::Paused;
}

bool LiveSession::drift_warning() const noexcept
{
    return std::abs(drift_) > kDriftLimit;
}

std::string LiveSession::state_frame()
{
    telemetry::TraceRow row;
    const auto& trace = runner_->trace();
    if (!trace.empty()) {
        row = trace.rows.back();
    } else {
        const auto& w = runner_->world();
        row.lead_position = w.lead.vehicle.position;
        row.lead_velocity = w.lead.vehicle.velocity;
        row.follower_position = w.follower.position;
        row.follower_velocity = w.follower.velocity;
        row.gap = w.gap;
    }
    ordered j;
    j["type"] = "state";
    j["seq"] = ++seq_;
    const auto values = telemetry::row_values(row);
    const auto& names = telemetry::column_names();
    for (std::size_t i = 0; i < values.size(); ++i) {
        j[std::string(names[i])] = values[i];
    }
    j["saturated"] = row.saturated;
    j["collision"] = row.collision;
    j["status"] = to_string(status_);
    j["condition"] = blend::to_string(config_.condition);
    j["lead_phase"] = world::to_string(runner_->world().lead.phase);
    j["drift_warning"] = drift_warning();
    return j.dump();
}

std::string LiveSession::hello_frame(ClientId id, Role role) const
{
    ordered j;
    j["type"] = "hello";
    j["client_id"] = id;
    j["role"] = role == Role::Driver ? "driver" : "spectator";
    j["condition"] = blend::to_string(config_.condition);
    j["seed"] = seed_;
    j["world_rate_hz"] = config_.run.world_rate_hz;
    j["frame_rate_hz"] = config_.run.frame_rate_hz;
    j["target_gap"] = config_.metrics.reference_gap;
    auto conditions = ordered::array();
    for (const auto& c : harness::all_conditions()) {
        conditions.push_back(blend::to_string(c));
    }
    j["conditions"] = conditions;
    return j.dump();
}

std::vector<Outgoing> LiveSession::connect(ClientId id)
{
    if (std::find(clients_.begin(), clients_.end(), id) == clients_.end()) {
        clients_.push_back(id);
    }
    return {};
}

std::vector<Outgoing> LiveSession::disconnect(ClientId id)
{
    clients_.erase(std::remove(clients_.begin(), clients_.end(), id), clients_.end());
    if (driver_ != id) {
        return {};
    }
    driver_.reset();
    if (status_ != Status::Running) {
        return {};
    }
    status_ = Status::Paused;
    return {{std::nullopt, state_frame()}};
}

std::vector<Outgoing> LiveSession::receive(ClientId id, std::string_view text)
{
    ClientMessage msg;
    try {
        msg = parse_client_message(text);
    } catch (const ProtocolError& e) {
        return {{id, format_error(e.what())}};
    }

    if (const auto* hello = std::get_if<HelloMessage>(&msg)) {
        connect(id);
        Role role = Role::Spectator;
        if (driver_ == id || (hello->requested == Role::Driver && !driver_)) {
            driver_ = id;
            role = Role::Driver;
        }
        return {{id, hello_frame(id, role)}, {id, state_frame()}};
    }

    if (driver_ != id) {
        return {{id, format_error("read-only spectator: only the driving client may send "
                                  "pedals or control")}};
    }

    if (const auto* pedals = std::get_if<PedalsMessage>(&msg)) {
        held_ = pedals->inputs;
        return {};
    }

    const auto& control = std::get<ControlMessage>(msg);
    if (control.condition) {
        const bool fresh = runner_->ticks() == 0 || control.action == ControlAction::Reset;
        if (!fresh) {
            return {{id, format_error("condition can only change before the trial starts "
                                      "or with reset")}};
        }
        config_.condition = *control.condition;
        restart();
    }
    switch (control.action) {
    case ControlAction::Start:
        if (status_ == Status::Finished) {
            return {{id, format_error("trial finished; send reset first")}};
        }
        status_ = Status::Running;
        break;
    case ControlAction::Pause:
        if (status_ == Status::Running) {
            status_ = Status::Paused;
        }
        break;
    case ControlAction::Reset:
        restart();
        break;
    case ControlAction::Select:
        break;
    }
    return {{std::nullopt, state_frame()}};
}

std::vector<Outgoing> LiveSession::advance(std::size_t ticks)
{
    std::vector<Outgoing> out;
    for (std::size_t i = 0; i < ticks && status_ == Status::Running; ++i) {
        try {
            runner_->step(held_);
        } catch (const std::exception& e) {
            status_ = Status::Finished;
            out.push_back({std::nullopt, format_error(std::string("trial aborted: ") + e.what())});
            return out;
        }
        if (runner_->done()) {
            auto end = finish();
            out.insert(out.end(), end.begin(), end.end());
            return out;
        }
        if (runner_->ticks() % frame_stride_ == 0) {
            out.push_back({std::nullopt, state_frame()});
        }
    }
    return out;
}

std::vector<Outgoing> LiveSession::finish()
{
    status_ = Status::Finished;
    std::vector<Outgoing> out{{std::nullopt, state_frame()}};

    auto result = std::make_shared<harness::TrialResult>();
    result->schedule = runner_->schedule();
    result->timed_out = runner_->timed_out();
    result->trace = runner_->trace();
    result->metrics = telemetry::compute_metrics(result->trace, config_.metrics);
    last_result_ = result;

    const auto dir = (std::filesystem::path(config_.run.output_dir) / "live" /
                      ("trial_" + std::to_string(++trial_index_) + "_" +
                       blend::to_string(config_.condition)))
                         .string();
    if (sink_) {
        sink_(dir, config_, seed_, result);
    }

    ordered j;
    j["type"] = "metrics";
    j["condition"] = blend::to_string(config_.condition);
    j["seed"] = seed_;
    j["t"] = runner_->time();
    j["timed_out"] = result->timed_out;
    j["metrics"] = metrics_object(result->metrics);
    if (sink_) {
        j["trace_dir"] = dir;
    }
    out.push_back({std::nullopt, j.dump()});
    return out;
}

} // namespace regenfeel::session
