#include "regenfeel/server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <thread>

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using net::ip::tcp;
using nlohmann::json;
using namespace regenfeel;

namespace {

ExperimentConfig live_config()
{
    ExperimentConfig c;
    c.driver.kind = DriverKind::Human;
    c.scenario.road_length = 300.0;
    c.scenario.stretch_bounds = {0.0, 100.0, 200.0, 300.0};
    return c;
}

server::ServerOptions ephemeral()
{
    server::ServerOptions o;
    o.port = 0;
    return o;
}

server::ServerOptions quiet_options()
{
    auto o = ephemeral();
    o.write_traces = false;
    return o;
}

class Client {
public:
    explicit Client(unsigned short port) : ws_(ioc_)
    {
        tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/");
    }

    void send(const json& j) { ws_.write(net::buffer(j.dump())); }

    json read()
    {
        beast::flat_buffer buf;
        ws_.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    }

    /// Reads frames until one satisfies `pred` or `limit` frames have passed.
    json read_until(const std::function<bool(const json&)>& pred, int limit = 2000)
    {
        for (int i = 0; i < limit; ++i) {
            auto j = read();
            if (pred(j)) {
                return j;
            }
        }
        ADD_FAILURE() << "expected frame never arrived";
        return {};
    }

    void close() { ws_.close(websocket::close_code::normal); }

private:
    net::io_context ioc_;
    websocket::stream<tcp::socket> ws_;
};

} // namespace

TEST(SessionServer, DriverRoundTrip)
{
    server::SessionServer srv(live_config(), quiet_options());
    srv.start();
    ASSERT_NE(srv.port(), 0);

    Client driver(srv.port());
    driver.send({{"type", "hello"}, {"role", "driver"}});
    const auto hello = driver.read();
    EXPECT_EQ(hello.at("type"), "hello");
    EXPECT_EQ(hello.at("role"), "driver");
    const auto initial = driver.read();
    EXPECT_EQ(initial.at("type"), "state");
    EXPECT_EQ(initial.at("status"), "paused");
    EXPECT_EQ(initial.at("t"), 0.0);

    driver.send({{"type", "control"}, {"action", "start"}});
    driver.send({{"type", "pedals"}, {"throttle", 0.0}, {"brake_x", 10.0}});
    const auto echoed = driver.read_until([](const json& j) {
        return j.at("type") == "state" && j.at("brake_x") == 10.0;
    });
    EXPECT_EQ(echoed.at("status"), "running");

    Client spectator(srv.port());
    spectator.send({{"type", "hello"}, {"role", "driver"}});
    EXPECT_EQ(spectator.read().at("role"), "spectator");
    spectator.send({{"type", "pedals"}, {"throttle", 1.0}, {"brake_x", 0.0}});
    const auto err = spectator.read_until([](const json& j) { return j.at("type") == "error"; });
    EXPECT_NE(err.at("message").get<std::string>().find("read-only"), std::string::npos);

    driver.send({{"type", "bogus"}});
    driver.read_until([](const json& j) { return j.at("type") == "error"; });

    driver.close();
    spectator.read_until([](const json& j) {
        return j.at("type") == "state" && j.at("status") == "paused";
    });
    spectator.close();
    srv.stop();
    srv.stop();
}

TEST(SessionServer, StateFramesFollowFrameRate)
{
    server::SessionServer srv(live_config(), quiet_options());
    srv.start();
    Client c(srv.port());
    c.send({{"type", "hello"}});
    (void)c.read();
    (void)c.read();
    c.send({{"type", "control"}, {"action", "start"}});

    const auto t0 = std::chrono::steady_clock::now();
    double first_t = -1.0;
    double last_t = 0.0;
    std::int64_t last_seq = 0;
    int states = 0;
    while (std::chrono::steady_clock::now() - t0 < std::chrono::milliseconds(1000)) {
        const auto j = c.read();
        if (j.at("type") != "state" || j.at("status") != "running") {
            continue;
        }
        const auto seq = j.at("seq").get<std::int64_t>();
        ASSERT_GT(seq, last_seq);
        last_seq = seq;
        last_t = j.at("t").get<double>();
        if (first_t < 0.0) {
            first_t = last_t;
        }
        ++states;
    }
    ASSERT_GT(states, 10);
    // 50 Hz frames at 1 kHz world rate: one frame per 20 ms of sim time.
    EXPECT_NEAR((last_t - first_t) / (states - 1), 0.020, 1e-9);
    c.close();
    srv.stop();
}

TEST(SessionServer, FinishedLiveTrialIsWritten)
{
    auto cfg = live_config();
    cfg.run.duration = 0.5;
    const auto out = std::filesystem::path(::testing::TempDir()) / "regenfeel_server_out";
    std::filesystem::remove_all(out);
    cfg.run.output_dir = out.string();

    server::SessionServer srv(cfg, ephemeral());
    srv.start();
    Client c(srv.port());
    c.send({{"type", "hello"}});
    c.send({{"type", "control"}, {"action", "start"}});
    const auto metrics = c.read_until([](const json& j) { return j.at("type") == "metrics"; });
    const auto dir = std::filesystem::path(metrics.at("trace_dir").get<std::string>());
    c.close();
    srv.stop();

    EXPECT_TRUE(std::filesystem::exists(dir / "trace.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "metrics.json"));
    std::filesystem::remove_all(out);
}
