#include "regenfeel/server.hpp"

#include "regenfeel/session.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

namespace regenfeel::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

struct Connected {
    session::ClientId id;
};
struct Disconnected {
    session::ClientId id;
};
struct Received {
    session::ClientId id;
    std::string text;
};
using InboundEvent = std::variant<Connected, Disconnected, Received>;

template <typename T>
class MessageQueue {
public:
    void push(T value)
    {
        {
            std::lock_guard lock(mutex_);
            items_.push_back(std::move(value));
        }
        cv_.notify_one();
    }

    std::deque<T> drain()
    {
        std::lock_guard lock(mutex_);
        std::deque<T> out;
        out.swap(items_);
        return out;
    }

    template <typename Rep, typename Period>
    void wait_for(std::chrono::duration<Rep, Period> d)
    {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, d, [this] { return !items_.empty(); });
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<T> items_;
};

/// Finished traces are written here, off the simulation thread.
class TraceWriter {
public:
    struct Job {
        std::string dir;
        ExperimentConfig config;
        std::uint64_t seed = 0;
        std::shared_ptr<const harness::TrialResult> result;
    };

    TraceWriter()
        : thread_([this](std::stop_token st) { run(st); })
    {
    }

    ~TraceWriter()
    {
        thread_.request_stop();
        jobs_.push({});
    }

    void submit(Job job) { jobs_.push(std::move(job)); }

private:
    void run(std::stop_token st)
    {
        for (;;) {
            const bool stopping = st.stop_requested();
            for (auto& job : jobs_.drain()) {
                write(job);
            }
            if (stopping) {
                return;
            }
            jobs_.wait_for(std::chrono::milliseconds(200));
        }
    }

    static void write(const Job& job)
    {
        if (!job.result) {
            return;
        }
        try {
            harness::write_trial_outputs(job.dir, job.config, job.seed, *job.result);
            std::fprintf(stderr, "trace written to %s\n", job.dir.c_str());
        } catch (const std::exception& e) {
            std::fprintf(stderr, "trace write failed: %s\n", e.what());
        }
    }

    MessageQueue<Job> jobs_;
    std::jthread thread_;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, session::ClientId id, MessageQueue<InboundEvent>& inbound)
        : ws_(std::move(socket)), id_(id), inbound_(inbound)
    {
    }

    void start(std::function<void(session::ClientId)> on_close)
    {
        on_close_ = std::move(on_close);
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) {
                self->close();
                return;
            }
            self->inbound_.push(Connected{self->id_});
            self->read();
        });
    }

    void send(std::shared_ptr<const std::string> text)
    {
        if (closed_) {
            return;
        }
        outbox_.push_back(std::move(text));
        if (outbox_.size() == 1) {
            write();
        }
    }

    void shutdown()
    {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->close();
                return;
            }
            self->inbound_.push(Received{self->id_, beast::buffers_to_string(self->buffer_.data())});
            self->buffer_.consume(self->buffer_.size());
            self->read();
        });
    }

    void write()
    {
        ws_.text(true);
        ws_.async_write(net::buffer(*outbox_.front()),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) {
                            if (ec) {
                                self->close();
                                return;
                            }
                            self->outbox_.pop_front();
                            if (!self->outbox_.empty()) {
                                self->write();
                            }
                        });
    }

    void close()
    {
        if (closed_) {
            return;
        }
        closed_ = true;
        outbox_.clear();
        inbound_.push(Disconnected{id_});
        if (on_close_) {
            on_close_(id_);
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    session::ClientId id_;
    MessageQueue<InboundEvent>& inbound_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> outbox_;
    std::function<void(session::ClientId)> on_close_;
    bool closed_ = false;
};

} // namespace

struct SessionServer::Impl {
    ExperimentConfig config;
    ServerOptions opts;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    MessageQueue<InboundEvent> inbound;
    std::map<session::ClientId, std::shared_ptr<Connection>> connections; // io thread only
    session::ClientId next_id = 1;
    std::optional<TraceWriter> writer;
    std::thread io_thread;
    std::jthread sim_thread;
    std::atomic<bool> running{false};
    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopped = false;

    void accept()
    {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                return;
            }
            const auto id = next_id++;
            auto conn = std::make_shared<Connection>(std::move(socket), id, inbound);
            connections[id] = conn;
            conn->start([this](session::ClientId closed) { connections.erase(closed); });
            accept();
        });
    }

    void deliver(std::vector<session::Outgoing> out)
    {
        if (out.empty()) {
            return;
        }
        net::post(ioc, [this, out = std::move(out)] {
            for (const auto& msg : out) {
                auto text = std::make_shared<const std::string>(msg.text);
                if (msg.to) {
                    if (auto it = connections.find(*msg.to); it != connections.end()) {
                        it->second->send(text);
                    }
                } else {
                    for (auto& [id, conn] : connections) {
                        conn->send(text);
                    }
                }
            }
        });
    }

    void simulate(std::stop_token st)
    {
        using clock = std::chrono::steady_clock;
        session::TraceSink sink;
        if (writer) {
            sink = [this](const std::string& dir, const ExperimentConfig& cfg, std::uint64_t seed,
                          std::shared_ptr<const harness::TrialResult> result) {
                writer->submit({dir, cfg, seed, std::move(result)});
            };
        }
        session::LiveSession live(config, opts.seed, sink);
        const double dt = live.world_dt();
        constexpr std::size_t kMaxCatchUp = 250; // ticks per loop pass

        double wall_running = 0.0;
        bool was_running = false;
        auto last = clock::now();
        while (!st.stop_requested()) {
            inbound.wait_for(std::chrono::milliseconds(2));
            for (auto& ev : inbound.drain()) {
                std::visit(
                    [&](auto& e) {
                        using E = std::decay_t<decltype(e)>;
                        if constexpr (std::is_same_v<E, Connected>) {
                            deliver(live.connect(e.id));
                        } else if constexpr (std::is_same_v<E, Disconnected>) {
                            deliver(live.disconnect(e.id));
                        } else {
                            deliver(live.receive(e.id, e.text));
                        }
                    },
                    ev);
            }

            const auto now = clock::now();
            const bool is_running = live.status() == session::Status::Running;
            if (is_running && !was_running) {
                wall_running = live.time();
            } else if (is_running) {
                wall_running += std::chrono::duration<double>(now - last).count();
            }
            was_running = is_running;
            last = now;
            if (!is_running) {
                continue;
            }

            const double target = std::floor(wall_running / dt + 1e-9);
            const double due = target - static_cast<double>(live.ticks());
            if (due > 0.0) {
                deliver(live.advance(std::min<std::size_t>(static_cast<std::size_t>(due), kMaxCatchUp)));
            }
            live.set_drift(wall_running - live.time());
        }
    }
};

SessionServer::SessionServer(ExperimentConfig config, ServerOptions opts)
    : impl_(std::make_unique<Impl>())
{
    config.validate();
    impl_->config = std::move(config);
    impl_->opts = std::move(opts);
}

SessionServer::~SessionServer()
{
    stop();
}

void SessionServer::start()
{
    auto& m = *impl_;
    if (m.running.exchange(true)) {
        return;
    }
    const tcp::endpoint ep(net::ip::make_address(m.opts.address), m.opts.port);
    m.acceptor.open(ep.protocol());
    m.acceptor.set_option(net::socket_base::reuse_address(true));
    m.acceptor.bind(ep);
    m.acceptor.listen();
    if (m.opts.write_traces) {
        m.writer.emplace();
    }
    m.accept();
    m.io_thread = std::thread([&m] { m.ioc.run(); });
    m.sim_thread = std::jthread([&m](std::stop_token st) { m.simulate(st); });
}

void SessionServer::stop()
{
    auto& m = *impl_;
    if (!m.running.exchange(false)) {
        return;
    }
    m.sim_thread.request_stop();
    if (m.sim_thread.joinable()) {
        m.sim_thread.join();
    }
    net::post(m.ioc, [&m] {
        beast::error_code ec;
        m.acceptor.close(ec);
        for (auto& [id, conn] : m.connections) {
            conn->shutdown();
        }
        m.connections.clear();
        m.ioc.stop();
    });
    if (m.io_thread.joinable()) {
        m.io_thread.join();
    }
    m.writer.reset();
    {
        std::lock_guard lock(m.stop_mutex);
        m.stopped = true;
    }
    m.stop_cv.notify_all();
}

void SessionServer::wait()
{
    auto& m = *impl_;
    std::unique_lock lock(m.stop_mutex);
    m.stop_cv.wait(lock, [&m] { return m.stopped; });
}

unsigned short SessionServer::port() const
{
    return impl_->acceptor.local_endpoint().port();
}

} // namespace regenfeel::server
