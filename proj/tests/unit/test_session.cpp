#include "regenfeel/session.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

using namespace regenfeel;
using namespace regenfeel::session;
using nlohmann::json;

namespace {

ExperimentConfig live_config()
{
    ExperimentConfig c;
    c.driver.kind = DriverKind::Human;
    c.scenario.road_length = 300.0;
    c.scenario.stretch_bounds = {0.0, 100.0, 200.0, 300.0};
    return c;
}

std::vector<json> frames(const std::vector<Outgoing>& out, const std::string& type)
{
    std::vector<json> v;
    for (const auto& o : out) {
        auto j = json::parse(o.text);
        if (j.at("type") == type) {
            v.push_back(std::move(j));
        }
    }
    return v;
}

json only(const std::vector<Outgoing>& out)
{
    EXPECT_EQ(out.size(), 1u);
    return out.empty() ? json{} : json::parse(out.front().text);
}

LiveSession started(ExperimentConfig c = live_config(), TraceSink sink = {})
{
    LiveSession s(std::move(c), 1, std::move(sink));
    s.receive(1, R"({"type":"hello","role":"driver"})");
    s.receive(1, R"({"type":"control","action":"start"})");
    return s;
}

} // namespace

TEST(ParseClientMessage, AcceptsWellFormedFrames)
{
    EXPECT_TRUE(std::holds_alternative<HelloMessage>(parse_client_message(R"({"type":"hello"})")));
    const auto p = std::get<PedalsMessage>(
        parse_client_message(R"({"type":"pedals","throttle":0.25,"brake_x":12.5})"));
    EXPECT_EQ(p.inputs, (drivers::PedalInputs{0.25, 12.5}));
    const auto c = std::get<ControlMessage>(
        parse_client_message(R"({"type":"control","action":"select","condition":"one-pedal-compensated"})"));
    EXPECT_EQ(c.action, ControlAction::Select);
    ASSERT_TRUE(c.condition.has_value());
    EXPECT_EQ(c.condition->pedal_mode, blend::PedalMode::OnePedal);
}

TEST(ParseClientMessage, RejectsMalformedFrames)
{
    for (const char* bad : {
             "not json",
             "[1,2]",
             R"({"kind":"hello"})",
             R"({"type":"dance"})",
             R"({"type":"hello","role":"pilot"})",
             R"({"type":"hello","extra":1})",
             R"({"type":"pedals","throttle":0.5})",
             R"({"type":"pedals","throttle":"a","brake_x":0})",
             R"({"type":"pedals","throttle":1.5,"brake_x":0})",
             R"({"type":"pedals","throttle":0,"brake_x":-1})",
             R"({"type":"control"})",
             R"({"type":"control","action":"jump"})",
             R"({"type":"control","action":"select"})",
             R"({"type":"control","action":"select","condition":"no-pedal"})",
             R"({"type":"state"})",
         }) {
        EXPECT_THROW((void)parse_client_message(bad), ProtocolError) << bad;
    }
}

TEST(LiveSession, StartsPausedAndIdle)
{
    LiveSession s(live_config(), 1);
    EXPECT_EQ(s.status(), Status::Paused);
    EXPECT_TRUE(s.advance(500).empty());
    EXPECT_EQ(s.ticks(), 0u);
    EXPECT_DOUBLE_EQ(s.time(), 0.0);
}

TEST(LiveSession, HelloAssignsRoles)
{
    LiveSession s(live_config(), 7);
    const auto first = s.receive(1, R"({"type":"hello","role":"driver"})");
    ASSERT_EQ(first.size(), 2u);
    const auto hello = json::parse(first[0].text);
    EXPECT_EQ(hello.at("role"), "driver");
    EXPECT_EQ(hello.at("seed"), 7);
    EXPECT_EQ(hello.at("conditions").size(), 4u);
    EXPECT_EQ(json::parse(first[1].text).at("type"), "state");

    const auto second = s.receive(2, R"({"type":"hello","role":"driver"})");
    EXPECT_EQ(json::parse(second[0].text).at("role"), "spectator");
    EXPECT_EQ(s.driver(), 1u);
}

TEST(LiveSession, BrakeEchoedInNextStateFrame)
{
    auto s = started();
    s.receive(1, R"({"type":"pedals","throttle":0,"brake_x":10})");
    const auto states = frames(s.advance(20), "state");
    ASSERT_EQ(states.size(), 1u);
    EXPECT_EQ(states[0].at("brake_x"), 10.0);
    EXPECT_EQ(states[0].at("status"), "running");
    EXPECT_GT(states[0].at("F_reg").get<double>(), -1.0);
    EXPECT_EQ(s.ticks(), 20u);
}

TEST(LiveSession, StateFramesCarryEveryColumn)
{
    auto s = started();
    const auto states = frames(s.advance(20), "state");
    ASSERT_EQ(states.size(), 1u);
    for (const auto& name : telemetry::column_names()) {
        EXPECT_TRUE(states[0].contains(std::string(name))) << name;
    }
    EXPECT_TRUE(states[0].at("collision").is_boolean());
    EXPECT_TRUE(states[0].at("drift_warning").is_boolean());
}

TEST(LiveSession, SpectatorIsReadOnly)
{
    auto s = started();
    s.receive(2, R"({"type":"hello","role":"spectator"})");
    const auto err = only(s.receive(2, R"({"type":"pedals","throttle":1,"brake_x":0})"));
    EXPECT_EQ(err.at("type"), "error");
    EXPECT_NE(err.at("message").get<std::string>().find("read-only"), std::string::npos);
    EXPECT_EQ(s.held_inputs(), drivers::PedalInputs{});
    EXPECT_EQ(only(s.receive(2, R"({"type":"control","action":"pause"})")).at("type"), "error");
    EXPECT_EQ(s.status(), Status::Running);
}

TEST(LiveSession, MalformedFrameGetsErrorAndChangesNothing)
{
    auto s = started();
    s.receive(1, R"({"type":"pedals","throttle":0.2,"brake_x":0})");
    const auto out = s.receive(1, R"({"type":"pedals","throttle":2,"brake_x":0})");
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].to, 1u);
    EXPECT_EQ(json::parse(out[0].text).at("type"), "error");
    EXPECT_EQ(s.held_inputs(), (drivers::PedalInputs{0.2, 0.0}));
}

TEST(LiveSession, DriverDisconnectPauses)
{
    auto s = started();
    (void)s.advance(100);
    const auto out = s.disconnect(1);
    EXPECT_EQ(s.status(), Status::Paused);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_FALSE(out[0].to.has_value());
    EXPECT_EQ(json::parse(out[0].text).at("status"), "paused");
    EXPECT_TRUE(s.advance(100).empty());
    EXPECT_EQ(s.ticks(), 100u);

    s.receive(3, R"({"type":"hello"})");
    EXPECT_EQ(s.driver(), 3u);
}

TEST(LiveSession, SequenceNumbersIncrease)
{
    auto s = started();
    std::int64_t last = 0;
    for (int i = 0; i < 20; ++i) {
        for (const auto& f : frames(s.advance(37), "state")) {
            const auto seq = f.at("seq").get<std::int64_t>();
            ASSERT_GT(seq, last);
            last = seq;
        }
    }
    EXPECT_EQ(static_cast<std::uint64_t>(last), s.frames_sent());
}

TEST(LiveSession, ConditionChangeOnlyWhenFresh)
{
    auto s = started();
    (void)s.advance(10);
    const auto err = only(s.receive(1, R"({"type":"control","action":"select","condition":"one-pedal-compensated"})"));
    EXPECT_EQ(err.at("type"), "error");

    const auto ok = only(s.receive(1, R"({"type":"control","action":"reset","condition":"one-pedal-compensated"})"));
    EXPECT_EQ(ok.at("condition"), "one-pedal-compensated");
    EXPECT_EQ(s.ticks(), 0u);
    EXPECT_EQ(s.status(), Status::Paused);
}

TEST(LiveSession, CompletedTrialProducesValidTraceAndMetrics)
{
    auto c = live_config();
    c.run.duration = 3.0;
    std::string sink_dir;
    std::shared_ptr<const harness::TrialResult> sunk;
    auto s = started(c, [&](const std::string& dir, const ExperimentConfig&, std::uint64_t,
                            std::shared_ptr<const harness::TrialResult> r) {
        sink_dir = dir;
        sunk = std::move(r);
    });
    s.receive(1, R"({"type":"pedals","throttle":0.3,"brake_x":0})");
    std::vector<Outgoing> all;
    for (int i = 0; i < 10 && s.status() == Status::Running; ++i) {
        auto out = s.advance(500);
        all.insert(all.end(), out.begin(), out.end());
    }
    EXPECT_EQ(s.status(), Status::Finished);
    const auto metrics = frames(all, "metrics");
    ASSERT_EQ(metrics.size(), 1u);
    EXPECT_EQ(metrics[0].at("trace_dir"), sink_dir);
    EXPECT_NE(sink_dir.find("two-pedal-compensated"), std::string::npos);
    ASSERT_TRUE(sunk);
    EXPECT_EQ(sunk->trace.size(), 3000u);
    EXPECT_TRUE(telemetry::validate_trace(sunk->trace).empty());
    EXPECT_DOUBLE_EQ(metrics[0].at("metrics").at("pct_throttle_use").get<double>(), 100.0);
    EXPECT_EQ(frames(all, "state").back().at("status"), "finished");

    const auto again = only(s.receive(1, R"({"type":"control","action":"start"})"));
    EXPECT_EQ(again.at("type"), "error");
}

TEST(LiveSession, DriftWarning)
{
    auto s = started();
    s.set_drift(0.049);
    EXPECT_FALSE(s.drift_warning());
    s.set_drift(0.051);
    EXPECT_TRUE(s.drift_warning());
    EXPECT_EQ(frames(s.advance(20), "state").at(0).at("drift_warning"), true);
}

TEST(LiveSession, FrameRateMustDivideWorldRate)
{
    auto c = live_config();
    c.run.frame_rate_hz = 30.0;
    EXPECT_THROW(LiveSession(c, 1), std::invalid_argument);
}
