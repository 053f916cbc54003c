#pragma once

#include "regenfeel/config.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace regenfeel::server {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765; // 0 picks a free port
    std::uint64_t seed = 1;
    bool write_traces = true;   // finished live trials go to run.output_dir/live
};

/// Live session over WebSocket. Network I/O runs on its own thread and talks
/// to the simulation thread only through queues of immutable messages.
class SessionServer {
public:
    SessionServer(ExperimentConfig config, ServerOptions opts);
    ~SessionServer();

    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Binds and starts the I/O and simulation threads.
    void start();
    /// Stops both threads; safe to call twice.
    void stop();
    /// Blocks until stop() is called from another thread or a signal.
    void wait();

    [[nodiscard]] unsigned short port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace regenfeel::server
