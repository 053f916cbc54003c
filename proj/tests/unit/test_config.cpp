#include "regenfeel/config.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

using namespace regenfeel;
using nlohmann::json;

namespace {

json minimal()
{
    return json{{"schema_version", kSchemaVersion}};
}

ExperimentConfig parse(const json& j)
{
    return config_from_json(j.dump());
}

} // namespace

TEST(Config, MinimalDocumentGivesDefaults)
{
    const auto c = parse(minimal());
    const ExperimentConfig d;
    EXPECT_EQ(c.condition, d.condition);
    EXPECT_DOUBLE_EQ(c.map.vehicle_mass, 1200.0);
    EXPECT_DOUBLE_EQ(c.run.world_rate_hz, 1000.0);
    EXPECT_EQ(c.driver.kind, DriverKind::Follower);
    EXPECT_EQ(config_to_json(c), config_to_json(d));
}

TEST(Config, SchemaVersionRequired)
{
    EXPECT_THROW((void)config_from_json("{}"), std::invalid_argument);
    EXPECT_THROW((void)parse(json{{"schema_version", 99}}), std::invalid_argument);
}

TEST(Config, UnknownKeysRejected)
{
    auto top = minimal();
    top["colour"] = "red";
    EXPECT_THROW((void)parse(top), std::invalid_argument);

    auto nested = minimal();
    nested["sea"]["gains"]["torque_kd"] = 1.0;
    try {
        (void)parse(nested);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("torque_kd"), std::string::npos);
    }
}

TEST(Config, WrongTypeRejected)
{
    auto j = minimal();
    j["map"]["vehicle_mass"] = "heavy";
    EXPECT_THROW((void)parse(j), std::invalid_argument);
}

TEST(Config, MalformedJsonRejected)
{
    EXPECT_THROW((void)config_from_json("{\"schema_version\": 1,"), std::invalid_argument);
}

TEST(Config, RoundTrip)
{
    auto j = minimal();
    j["condition"] = "one-pedal-uncompensated";
    j["map"]["force_feel_upper_slope"] = 0.0164;
    j["sea"]["dyno_phase_offset"] = 3;
    j["run"]["duration"] = 25.0;
    j["run"]["seeds"] = {3, 4, 5};
    j["driver"]["kind"] = "script";
    j["driver"]["script"] = json::array({{{"t", 0.0}}, {{"t", 10.0}, {"brake_x", 25.0}}});
    const auto c = parse(j);
    EXPECT_EQ(c.condition.pedal_mode, blend::PedalMode::OnePedal);
    EXPECT_EQ(c.condition.compensation, blend::Compensation::Off);
    ASSERT_TRUE(c.map.force_feel_upper_slope.has_value());
    ASSERT_TRUE(c.driver.script.has_value());
    EXPECT_EQ(c.driver.script->knots.size(), 2u);

    const auto text = config_to_json(c);
    const auto again = config_from_json(text);
    EXPECT_EQ(config_to_json(again), text);
    EXPECT_EQ(again.run.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
    EXPECT_EQ(again.dyno_phase_offset, 3u);
}

TEST(Config, ValidationErrors)
{
    const auto expect_invalid = [](json j) {
        EXPECT_THROW((void)parse(j), std::invalid_argument) << j.dump();
    };
    auto j = minimal();
    j["run"]["world_rate_hz"] = 700.0;
    expect_invalid(j);

    j = minimal();
    j["run"]["frame_rate_hz"] = 2000.0;
    expect_invalid(j);

    j = minimal();
    j["run"]["initial_speed"] = 50.0;
    expect_invalid(j);

    j = minimal();
    j["driver"]["kind"] = "script";
    expect_invalid(j);

    j = minimal();
    j["driver"]["kind"] = "robot";
    expect_invalid(j);

    j = minimal();
    j["condition"] = "three-pedal-compensated";
    expect_invalid(j);

    j = minimal();
    j["map"]["vehicle_mass"] = -1.0;
    expect_invalid(j);

    j = minimal();
    j["scenario"]["stretch_bounds"] = {0.0, 500.0};
    expect_invalid(j);

    j = minimal();
    j["sea"]["gains"]["torque_kp"] = 0.0;
    expect_invalid(j);
}

TEST(Config, LoadFromFile)
{
    const std::string path = ::testing::TempDir() + "regenfeel_config_test.json";
    {
        std::ofstream os(path);
        os << minimal().dump();
    }
    EXPECT_NO_THROW((void)load_config(path));
    std::remove(path.c_str());
    EXPECT_THROW((void)load_config(path), std::invalid_argument);
}
