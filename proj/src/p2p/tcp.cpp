#include <wfchain/p2p/tcp.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

namespace wfchain::p2p {

namespace {

constexpr auto kRedialInterval = std::chrono::milliseconds(500);
constexpr int kHandshakeTimeoutSeconds = 5;

bool write_all(int fd, std::string_view bytes)
{
    while (!bytes.empty()) {
        const auto n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

/// Reads until one frame is complete; the frame includes its header.
std::optional<std::string> read_frame(int fd, FrameReader& reader)
{
    char buf[65536];
    while (true) {
        if (auto body = reader.next()) return frame(*body);
        const auto n = ::recv(fd, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return std::nullopt;
        reader.feed({buf, static_cast<std::size_t>(n)});
    }
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address)
{
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("address '" + address + "' lacks a port");
    const auto port = std::stoul(address.substr(colon + 1));
    if (port > 65535) throw std::invalid_argument("bad port in '" + address + "'");
    return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

int connect_to(const std::string& host, std::uint16_t port)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return -1;
    int fd = -1;
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    return fd;
}

} // namespace

struct TcpTransport::Connection {
    int fd = -1;
    std::string peer;
    FrameReader reader;
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> out;
    bool closed = false;

    ~Connection()
    {
        if (fd >= 0) ::close(fd);
    }
};

TcpTransport::TcpTransport(const NodeIdentity& self, const Membership& members, Hello hello, Callbacks callbacks)
    : self_(self), members_(members), hello_(std::move(hello)), callbacks_(std::move(callbacks))
{
}

TcpTransport::~TcpTransport()
{
    stop();
}

void TcpTransport::spawn(std::function<void()> work)
{
    {
        std::lock_guard lock(mutex_);
        ++workers_;
    }
    std::thread([this, work = std::move(work)] {
        work();
        std::lock_guard lock(mutex_);
        --workers_;
        stopped_cv_.notify_all();
    }).detach();
}

std::uint16_t TcpTransport::listen(const std::string& host, std::uint16_t port)
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::invalid_argument("listen host must be an IPv4 address: " + host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    {
        std::lock_guard lock(mutex_);
        listeners_.push_back(fd);
    }
    spawn([this, fd] { accept_loop(fd); });
    return ntohs(addr.sin_port);
}

void TcpTransport::accept_loop(int listen_fd)
{
    while (!stopping_) {
        const int fd = ::accept(listen_fd, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            return;
        }
        spawn([this, fd] { adopt(fd, {}); });
    }
}

void TcpTransport::dial(const std::string& peer, const std::string& address)
{
    if (!(self_.name < peer)) return; // the peer dials us
    auto [host, port] = split_address(address);
    spawn([this, peer, host = std::move(host), port = port] { dial_loop(peer, host, port); });
}

void TcpTransport::dial_loop(std::string peer, std::string host, std::uint16_t port)
{
    while (!stopping_) {
        bool up = false;
        {
            std::lock_guard lock(mutex_);
            up = connections_.contains(peer);
        }
        if (!up) {
            const int fd = connect_to(host, port);
            if (fd >= 0) adopt(fd, peer);
        }
        std::unique_lock lock(mutex_);
        stopped_cv_.wait_for(lock, kRedialInterval, [this] { return stopping_.load(); });
    }
}

void TcpTransport::adopt(int fd, const std::string& expected_peer)
{
    timeval tv{kHandshakeTimeoutSeconds, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    try {
        if (!write_all(fd, encode_hello(self_, hello_))) throw ProtocolError("peer closed during handshake");
        const auto first = read_frame(fd, conn->reader);
        if (!first) throw ProtocolError("no Hello received");
        const auto theirs = decode_hello(*first, members_);
        if (const auto bad = hello_mismatch(hello_, theirs)) throw ProtocolError("handshake mismatch: " + *bad);
        if (!expected_peer.empty() && theirs.node != expected_peer) throw ProtocolError("unexpected peer");
        conn->peer = theirs.node;
    } catch (const std::exception&) {
        return;
    }
    timeval none{0, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &none, sizeof none);
    {
        std::lock_guard lock(mutex_);
        if (stopping_ || connections_.contains(conn->peer)) return;
        connections_[conn->peer] = conn;
    }
    if (callbacks_.on_connected) callbacks_.on_connected(conn->peer);
    spawn([this, conn] { writer(conn); });
    reader(conn);
}

void TcpTransport::reader(std::shared_ptr<Connection> conn)
{
    std::string reason = "closed by peer";
    char buf[65536];
    try {
        while (!stopping_) {
            while (auto body = conn->reader.next()) {
                auto msg = decode_body(*body, members_);
                if (msg.sender != conn->peer) throw ProtocolError("sender does not match connection");
                if (callbacks_.on_message) callbacks_.on_message(conn->peer, std::move(msg));
            }
            const auto n = ::recv(conn->fd, buf, sizeof buf, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) break;
            conn->reader.feed({buf, static_cast<std::size_t>(n)});
        }
    } catch (const ProtocolError& e) {
        reason = std::string("protocol error: ") + e.what();
    }
    close(conn, reason);
}

void TcpTransport::writer(std::shared_ptr<Connection> conn)
{
    while (true) {
        std::string next;
        {
            std::unique_lock lock(conn->mutex);
            conn->cv.wait(lock, [&] { return conn->closed || !conn->out.empty(); });
            if (conn->closed) return;
            next = std::move(conn->out.front());
            conn->out.pop_front();
        }
        if (!write_all(conn->fd, next)) {
            close(conn, "write failed");
            return;
        }
    }
}

void TcpTransport::close(const std::shared_ptr<Connection>& conn, const std::string& reason)
{
    {
        std::lock_guard lock(conn->mutex);
        if (conn->closed) return;
        conn->closed = true;
    }
    conn->cv.notify_all();
    ::shutdown(conn->fd, SHUT_RDWR);
    bool was_registered = false;
    {
        std::lock_guard lock(mutex_);
        const auto it = connections_.find(conn->peer);
        if (it != connections_.end() && it->second == conn) {
            connections_.erase(it);
            was_registered = true;
        }
    }
    if (was_registered && callbacks_.on_disconnected) callbacks_.on_disconnected(conn->peer, reason);
}

bool TcpTransport::send(const std::string& peer, const Message& msg)
{
    std::shared_ptr<Connection> conn;
    {
        std::lock_guard lock(mutex_);
        const auto it = connections_.find(peer);
        if (it == connections_.end()) return false;
        conn = it->second;
    }
    std::string bytes;
    try {
        bytes = encode_message(msg);
    } catch (const EncodeError&) {
        return false;
    }
    bool overflow = false;
    {
        std::lock_guard lock(conn->mutex);
        if (conn->closed) return false;
        conn->out.push_back(std::move(bytes));
        overflow = conn->out.size() > kMaxQueuedFrames;
    }
    if (overflow) {
        close(conn, "slow peer");
        return false;
    }
    conn->cv.notify_one();
    return true;
}

std::vector<std::string> TcpTransport::connected() const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : connections_) out.push_back(name);
    return out;
}

void TcpTransport::stop()
{
    std::vector<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lock(mutex_);
        if (stopping_.exchange(true) && workers_ == 0) return;
        for (const int fd : listeners_) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
        listeners_.clear();
        for (const auto& [_, c] : connections_) conns.push_back(c);
    }
    stopped_cv_.notify_all();
    for (const auto& c : conns) close(c, "stopping");
    std::unique_lock lock(mutex_);
    stopped_cv_.wait(lock, [this] { return workers_ == 0; });
}

} // namespace wfchain::p2p
