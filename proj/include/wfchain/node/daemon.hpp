#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <wfchain/node/node.hpp>
#include <wfchain/p2p/tcp.hpp>

namespace httplib {
class Server;
}

namespace wfchain::node {

/// Fan-out of node events to stream subscribers. Each subscriber has a
/// bounded queue; one that falls behind is disconnected.
class EventBroadcaster {
public:
    static constexpr std::size_t kCapacity = 1024;

    struct Subscriber {
        std::mutex mutex;
        std::condition_variable cv;
        std::deque<std::string> queue;
        bool closed = false;
        bool overflowed = false;
    };

    std::shared_ptr<Subscriber> subscribe();
    void unsubscribe(const std::shared_ptr<Subscriber>& sub);
    void publish(const NodeEvent& event);
    void close_all();
    std::size_t subscribers() const;

    /// Server-push framing: `event:` name line plus one `data:` JSON line.
    static std::string format(const NodeEvent& event, std::uint64_t seq);

private:
    mutable std::mutex mutex_;
    std::list<std::shared_ptr<Subscriber>> subs_;
    std::uint64_t seq_ = 0;
};

class LoopStopped : public std::runtime_error {
public:
    LoopStopped() : std::runtime_error("node is shutting down") {}
};

/// Live node: TCP gossip, HTTP API and mining around one Node, all state
/// touched only by the loop thread.
class Daemon {
public:
    Daemon(NodeConfig config, KeyPair keys, std::chrono::milliseconds sync_timeout = std::chrono::seconds(3));
    ~Daemon();
    Daemon(const Daemon&) = delete;
    Daemon& operator=(const Daemon&) = delete;

    /// Binds both listeners, dials peers and starts the loop.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    std::uint16_t api_port() const { return api_port_; }
    std::uint16_t p2p_port() const { return p2p_port_; }
    const NodeConfig& config() const { return config_; }
    EventBroadcaster& events() { return broadcaster_; }

    /// Runs f(node) on the loop and returns its result.
    template <class F>
    auto call(F f) -> std::invoke_result_t<F, Node&>
    {
        using R = std::invoke_result_t<F, Node&>;
        auto task = std::make_shared<std::packaged_task<R()>>([this, f = std::move(f)]() mutable { return f(*node_); });
        auto fut = task->get_future();
        post([task] { (*task)(); });
        return fut.get();
    }

    /// Queues work for the loop; throws LoopStopped after shutdown.
    void post(std::function<void()> work);

private:
    void loop();
    void flush();
    void setup_routes();

    NodeConfig config_;
    std::chrono::milliseconds sync_timeout_;
    std::unique_ptr<Node> node_;
    std::unique_ptr<p2p::TcpTransport> transport_;
    std::unique_ptr<httplib::Server> http_;
    EventBroadcaster broadcaster_;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    bool stopping_ = false;
    std::atomic<bool> stopped_{false};

    std::thread loop_thread_;
    std::thread http_thread_;
    std::uint16_t api_port_ = 0;
    std::uint16_t p2p_port_ = 0;
};

} // namespace wfchain::node
