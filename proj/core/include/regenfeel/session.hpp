#pragma once

#include "regenfeel/config.hpp"
#include "regenfeel/harness.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace regenfeel::session {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Role { Driver, Spectator };

struct HelloMessage {
    Role requested = Role::Driver;
};

enum class ControlAction { Start, Pause, Reset, Select };

struct ControlMessage {
    ControlAction action = ControlAction::Start;
    std::optional<blend::DriveCondition> condition;
};

struct PedalsMessage {
    drivers::PedalInputs inputs;
};

using ClientMessage = std::variant<HelloMessage, ControlMessage, PedalsMessage>;

/// Parses one client text frame. Throws ProtocolError when the frame is not
/// a well-formed hello, control or pedals message.
[[nodiscard]] ClientMessage parse_client_message(std::string_view text);

[[nodiscard]] std::string format_error(std::string_view message);

enum class Status { Paused, Running, Finished };

[[nodiscard]] const char* to_string(Status s);

using ClientId = std::uint64_t;

struct Outgoing {
    std::optional<ClientId> to; // nullopt: every connected client
    std::string text;
};

/// Receives the finished trial for writing; called from the sim context, so
/// implementations should hand the work off rather than block.
using TraceSink = std::function<void(const std::string& dir,
                                     const ExperimentConfig& config,
                                     std::uint64_t seed,
                                     std::shared_ptr<const harness::TrialResult> result)>;

/// Live human-driven trial. Not thread-safe: the simulation context owns it
/// and feeds it network events as values.
class LiveSession {
public:
    LiveSession(ExperimentConfig config, std::uint64_t seed, TraceSink sink = {});

    std::vector<Outgoing> connect(ClientId id);
    std::vector<Outgoing> disconnect(ClientId id);
    std::vector<Outgoing> receive(ClientId id, std::string_view text);

    /// Runs up to `ticks` world ticks while running. State frames go out every
    /// world_rate/frame_rate ticks; metrics follow the final tick.
    std::vector<Outgoing> advance(std::size_t ticks);

    /// Sim time lagging wall time (s), measured by the real-time loop.
    void set_drift(double seconds) noexcept { drift_ = seconds; }
    [[nodiscard]] bool drift_warning() const noexcept;

    [[nodiscard]] Status status() const noexcept { return status_; }
    [[nodiscard]] double time() const noexcept { return runner_->time(); }
    [[nodiscard]] std::uint64_t ticks() const noexcept { return runner_->ticks(); }
    [[nodiscard]] std::optional<ClientId> driver() const noexcept { return driver_; }
    [[nodiscard]] const drivers::PedalInputs& held_inputs() const noexcept { return held_; }
    [[nodiscard]] const harness::TrialRunner& runner() const noexcept { return *runner_; }
    [[nodiscard]] std::uint64_t frames_sent() const noexcept { return seq_; }
    [[nodiscard]] double world_dt() const noexcept { return config_.run.dt(); }

    /// Most recently finished trial, if any.
    [[nodiscard]] std::shared_ptr<const harness::TrialResult> last_result() const noexcept
    {
        return last_result_;
    }

    static constexpr double kDriftLimit = 0.050; // s

private:
    std::string state_frame();
    std::string hello_frame(ClientId id, Role role) const;
    std::vector<Outgoing> finish();
    void restart();

    ExperimentConfig config_;
    std::uint64_t seed_;
    TraceSink sink_;
    std::unique_ptr<harness::TrialRunner> runner_;
    std::vector<ClientId> clients_;
    std::optional<ClientId> driver_;
    drivers::PedalInputs held_;
    Status status_ = Status::Paused;
    std::uint64_t seq_ = 0;
    std::uint64_t trial_index_ = 0;
    std::size_t frame_stride_ = 20;
    double drift_ = 0.0;
    std::shared_ptr<const harness::TrialResult> last_result_;
};

} // namespace regenfeel::session
