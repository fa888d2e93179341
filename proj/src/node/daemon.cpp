#include <wfchain/node/daemon.hpp>

#include <httplib.h>

#include <cstdio>

namespace wfchain::node {

namespace {

constexpr auto kIdleWait = std::chrono::milliseconds(50);
constexpr auto kStreamPoll = std::chrono::milliseconds(500);
constexpr std::size_t kHttpThreads = 32;

std::pair<std::string, std::uint16_t> split(const std::string& address)
{
    const auto colon = address.rfind(':');
    return {address.substr(0, colon), static_cast<std::uint16_t>(std::stoul(address.substr(colon + 1)))};
}

void reply(httplib::Response& res, int status, const Json& body)
{
    res.status = status;
    res.set_content(canonical_bytes(body), "application/json");
}

void reply(httplib::Response& res, const ActionResult& r)
{
    reply(res, r.status, r.body);
}

void fail(httplib::Response& res, int status, const std::string& code, const std::string& reason)
{
    reply(res, ActionResult::error(status, code, reason));
}

/// Canonical-JSON request body; replies 400 and returns nullopt when malformed.
std::optional<Json> body_of(const httplib::Request& req, httplib::Response& res)
{
    try {
        return parse_canonical(req.body);
    } catch (const std::exception& e) {
        fail(res, 400, "MalformedRequest", e.what());
        return std::nullopt;
    }
}

} // namespace

std::shared_ptr<EventBroadcaster::Subscriber> EventBroadcaster::subscribe()
{
    auto sub = std::make_shared<Subscriber>();
    std::lock_guard lock(mutex_);
    subs_.push_back(sub);
    return sub;
}

void EventBroadcaster::unsubscribe(const std::shared_ptr<Subscriber>& sub)
{
    {
        std::lock_guard lock(sub->mutex);
        sub->closed = true;
    }
    sub->cv.notify_all();
    std::lock_guard lock(mutex_);
    subs_.remove(sub);
}

std::string EventBroadcaster::format(const NodeEvent& event, std::uint64_t seq)
{
    return "id: " + std::to_string(seq) + "\nevent: " + event.name + "\ndata: " + canonical_bytes(event.data) + "\n\n";
}

void EventBroadcaster::publish(const NodeEvent& event)
{
    std::vector<std::shared_ptr<Subscriber>> slow;
    {
        std::lock_guard lock(mutex_);
        const auto text = format(event, ++seq_);
        for (const auto& sub : subs_) {
            std::lock_guard sl(sub->mutex);
            if (sub->closed) continue;
            if (sub->queue.size() >= kCapacity) {
                sub->overflowed = true;
                sub->closed = true;
                sub->queue.clear();
                slow.push_back(sub);
            } else {
                sub->queue.push_back(text);
            }
            sub->cv.notify_all();
        }
    }
    for (const auto& s : slow) unsubscribe(s);
}

void EventBroadcaster::close_all()
{
    std::list<std::shared_ptr<Subscriber>> subs;
    {
        std::lock_guard lock(mutex_);
        subs.swap(subs_);
    }
    for (const auto& sub : subs) {
        {
            std::lock_guard lock(sub->mutex);
            sub->closed = true;
        }
        sub->cv.notify_all();
    }
}

std::size_t EventBroadcaster::subscribers() const
{
    std::lock_guard lock(mutex_);
    return subs_.size();
}

Daemon::Daemon(NodeConfig config, KeyPair keys, std::chrono::milliseconds sync_timeout)
    : config_(std::move(config)), sync_timeout_(sync_timeout)
{
    auto settings = NodeSettings::from_config(config_, std::move(keys));
    settings.seed = std::random_device{}();
    node_ = std::make_unique<Node>(std::move(settings));

    p2p::Hello hello;
    hello.network_id = config_.network_id;
    hello.genesis = node_->chain().genesis().hash;
    hello.node = config_.name;
    hello.design = std::string(engine::to_string(config_.design));

    p2p::TcpTransport::Callbacks cb;
    cb.on_message = [this](const std::string&, p2p::Message msg) {
        try {
            post([this, msg = std::move(msg)] { node_->receive(msg); });
        } catch (const LoopStopped&) {
        }
    };
    cb.on_connected = [this](const std::string& peer) {
        try {
            post([this, peer] { node_->peer_up(peer); });
        } catch (const LoopStopped&) {
        }
    };
    cb.on_disconnected = [this](const std::string& peer, const std::string&) {
        try {
            post([this, peer] { node_->peer_down(peer); });
        } catch (const LoopStopped&) {
        }
    };
    transport_ = std::make_unique<p2p::TcpTransport>(node_->settings().identity, node_->settings().members,
                                                     std::move(hello), std::move(cb));
    http_ = std::make_unique<httplib::Server>();
    http_->new_task_queue = [] { return new httplib::ThreadPool(kHttpThreads); };
    setup_routes();
}

Daemon::~Daemon()
{
    stop();
}

void Daemon::post(std::function<void()> work)
{
    {
        std::lock_guard lock(mutex_);
        if (stopping_) throw LoopStopped();
        queue_.push_back(std::move(work));
    }
    cv_.notify_one();
}

void Daemon::start()
{
    const auto [p2p_host, p2p_port] = split(config_.listen_p2p);
    p2p_port_ = transport_->listen(p2p_host, p2p_port);
    const auto [api_host, api_port] = split(config_.listen_api);
    const int bound = api_port == 0 ? http_->bind_to_any_port(api_host) : (http_->bind_to_port(api_host, api_port) ? api_port : -1);
    if (bound < 0) throw std::runtime_error("cannot listen on " + config_.listen_api);
    api_port_ = static_cast<std::uint16_t>(bound);

    loop_thread_ = std::thread([this] { loop(); });
    http_thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
    for (const auto& p : config_.peers) transport_->dial(p.name, p.address);
}

void Daemon::stop()
{
    if (stopped_.exchange(true)) return;
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    broadcaster_.close_all();
    if (http_) http_->stop();
    if (http_thread_.joinable()) http_thread_.join();
    if (transport_) transport_->stop();
    if (loop_thread_.joinable()) loop_thread_.join();
}

void Daemon::wait()
{
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return stopping_; });
}

void Daemon::loop()
{
    const auto sync_deadline = std::chrono::steady_clock::now() + sync_timeout_;
    while (true) {
        std::deque<std::function<void()>> work;
        {
            std::unique_lock lock(mutex_);
            const bool mining = config_.mining.enabled && node_->synced();
            if (!mining) cv_.wait_for(lock, kIdleWait, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) break;
            work.swap(queue_);
        }
        for (auto& w : work) {
            try {
                w();
            } catch (const std::exception& e) {
                std::fprintf(stderr, "%s: loop task failed: %s\n", config_.name.c_str(), e.what());
            }
            flush();
        }
        if (!node_->synced() && std::chrono::steady_clock::now() >= sync_deadline) node_->mark_synced();
        if (config_.mining.enabled && node_->synced()) node_->mine_step(config_.mining.budget);
        flush();
    }
    // Fail pending callers instead of leaving them blocked.
    std::deque<std::function<void()>> rest;
    {
        std::lock_guard lock(mutex_);
        rest.swap(queue_);
    }
    rest.clear();
}

void Daemon::flush()
{
    for (auto& out : node_->take_outbound()) transport_->send(out.to, out.msg);
    for (const auto& ev : node_->take_events()) broadcaster_.publish(ev);
}

void Daemon::setup_routes()
{
    auto& s = *http_;

    // Reads and writes of workflow state wait for the initial chain sync.
    const auto guarded = [this](auto handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                if (!call([](Node& n) { return n.synced(); })) {
                    fail(res, 503, "NotSynced", "node is still synchronising with its peers");
                    return;
                }
                handler(req, res);
            } catch (const std::future_error&) {
                fail(res, 503, "ShuttingDown", "node is shutting down");
            } catch (const LoopStopped&) {
                fail(res, 503, "ShuttingDown", "node is shutting down");
            }
        };
    };

    s.Get("/chain/head", [this](const httplib::Request&, httplib::Response& res) {
        try {
            reply(res, 200, call([](Node& n) { return n.head_json(); }));
        } catch (const std::exception&) {
            fail(res, 503, "ShuttingDown", "node is shutting down");
        }
    });

    s.Get("/chain/blocks", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::optional<Digest> from;
        if (req.has_param("from") && !req.get_param_value("from").empty()) {
            try {
                from = Digest::from_hex(req.get_param_value("from"));
            } catch (const std::invalid_argument&) {
                return fail(res, 400, "MalformedRequest", "from must be a block hash");
            }
        }
        const auto out = call([from](Node& n) { return n.blocks_json(from); });
        if (!out) return fail(res, 404, "UnknownBlock", from->hex());
        reply(res, 200, *out);
    }));

    s.Get("/models", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, call([](Node& n) { return n.models_json(); }));
    }));

    s.Post("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto doc = body_of(req, res);
        if (!doc) return;
        reply(res, call([&](Node& n) { return n.submit_model(*doc); }));
    }));

    s.Get("/cases", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, call([](Node& n) { return n.cases_json(); }));
    }));

    s.Post("/cases", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto doc = body_of(req, res);
        if (!doc) return;
        if (!doc->is_object() || !doc->contains("model") || !(*doc)["model"].is_string()) {
            return fail(res, 400, "MalformedRequest", "model: required string");
        }
        std::optional<std::string> case_id;
        if (doc->contains("case_id")) {
            if (!(*doc)["case_id"].is_string()) return fail(res, 400, "MalformedRequest", "case_id: must be a string");
            case_id = (*doc)["case_id"].get<std::string>();
        }
        const auto model = (*doc)["model"].get<std::string>();
        reply(res, call([&](Node& n) { return n.launch_case(model, case_id); }));
    }));

    s.Get("/worklist", guarded([this](const httplib::Request& req, httplib::Response& res) {
        worklist::ListFilter filter;
        if (req.has_param("case")) filter.case_id = req.get_param_value("case");
        filter.history = req.has_param("history") && req.get_param_value("history") != "0";
        reply(res, 200, call([&](Node& n) { return n.worklist().list_view(filter); }));
    }));

    s.Post(R"(/worklist/([^/]+)/complete)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        Json outputs = Json::object();
        if (!req.body.empty()) {
            const auto doc = body_of(req, res);
            if (!doc) return;
            if (!doc->is_object()) return fail(res, 400, "MalformedRequest", "body must be an object");
            if (doc->contains("outputs")) outputs = (*doc)["outputs"];
        }
        reply(res, call([&](Node& n) { return n.complete_item(id, outputs); }));
    }));

    s.Get("/transactions/pending", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, call([](Node& n) { return n.pending_json(); }));
    }));

    s.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
        auto sub = broadcaster_.subscribe();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [sub](std::size_t, httplib::DataSink& sink) {
                std::deque<std::string> batch;
                {
                    std::unique_lock lock(sub->mutex);
                    sub->cv.wait_for(lock, kStreamPoll, [&] { return sub->closed || !sub->queue.empty(); });
                    if (sub->closed) return false;
                    batch.swap(sub->queue);
                }
                if (batch.empty()) return sink.write(": keepalive\n\n", 13);
                for (const auto& text : batch) {
                    if (!sink.write(text.data(), text.size())) return false;
                }
                return true;
            },
            [this, sub](bool) { broadcaster_.unsubscribe(sub); });
    });

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            reply(res, res.status, ActionResult::error(res.status, res.status == 404 ? "NotFound" : "HttpError",
                                                       httplib::status_message(res.status))
                                       .body);
        }
    });
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        fail(res, 500, "InternalError", what);
    });
}

} // namespace wfchain::node
