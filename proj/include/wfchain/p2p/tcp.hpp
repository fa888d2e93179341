#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <wfchain/p2p/message.hpp>

namespace wfchain::p2p {

/// Framed TCP transport. Every connection starts with a signed Hello from
/// each side; afterwards one reader and one writer thread serve it. Between
/// two members only the one with the smaller name dials, so a pair never
/// holds two connections.
class TcpTransport {
public:
    struct Callbacks {
        /// Called from reader threads with verified messages.
        std::function<void(const std::string& peer, Message msg)> on_message;
        std::function<void(const std::string& peer)> on_connected;
        std::function<void(const std::string& peer, const std::string& reason)> on_disconnected;
    };

    TcpTransport(const NodeIdentity& self, const Membership& members, Hello hello, Callbacks callbacks);
    ~TcpTransport();
    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    /// Binds and starts accepting; port 0 picks a free port. Returns the bound port.
    std::uint16_t listen(const std::string& host, std::uint16_t port);
    /// Keeps a connection to the peer at host:port alive until stop().
    void dial(const std::string& peer, const std::string& address);

    /// Queues the message; false when the peer is not connected or the
    /// message is too large to frame.
    bool send(const std::string& peer, const Message& msg);
    std::vector<std::string> connected() const;
    void stop();

    static constexpr std::size_t kMaxQueuedFrames = 4096;

private:
    struct Connection;

    void accept_loop(int listen_fd);
    void dial_loop(std::string peer, std::string host, std::uint16_t port);
    /// Runs the handshake on a fresh socket and starts its workers.
    void adopt(int fd, const std::string& expected_peer);
    void reader(std::shared_ptr<Connection> conn);
    void writer(std::shared_ptr<Connection> conn);
    void close(const std::shared_ptr<Connection>& conn, const std::string& reason);
    void spawn(std::function<void()> work);

    const NodeIdentity& self_;
    const Membership& members_;
    Hello hello_;
    Callbacks callbacks_;

    mutable std::mutex mutex_;
    std::condition_variable stopped_cv_;
    std::map<std::string, std::shared_ptr<Connection>> connections_;
    std::vector<int> listeners_;
    std::atomic<bool> stopping_{false};
    int workers_ = 0;
};

} // namespace wfchain::p2p
