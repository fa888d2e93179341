#include <doctest.h>

#include <httplib.h>

#include <thread>

#include <wfchain/node/daemon.hpp>

#include "../support/harness.hpp"

using namespace wfchain;
using namespace wfchain::testing;
using namespace std::chrono_literals;
using node::Daemon;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir()
    {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("wfdaemon-test-" + std::to_string(::getpid()) + "-" + std::to_string(++counter));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

node::NodeConfig config(const std::string& name, const TempDir& dir, std::vector<std::pair<std::string, std::string>> peers,
                        unsigned k = 1)
{
    node::NodeConfig c;
    c.name = name;
    c.network_id = "test";
    c.design = engine::Design::Actions;
    c.confirmation_depth = k;
    c.mining.difficulty = 6;
    c.data_dir = dir.path / name;
    for (const auto& [p, address] : peers) c.peers.push_back({p, address, *identities().members.find(p)});
    return c;
}

KeyPair keys(const std::string& name)
{
    return identities()[name].keys;
}

struct Reply {
    int status = 0;
    Json body;
};

Reply get(std::uint16_t port, const std::string& path)
{
    httplib::Client cli("127.0.0.1", port);
    auto res = cli.Get(path);
    REQUIRE(res);
    return {res->status, Json::parse(res->body)};
}

Reply post(std::uint16_t port, const std::string& path, const std::string& body)
{
    httplib::Client cli("127.0.0.1", port);
    auto res = cli.Post(path, body, "application/json");
    REQUIRE(res);
    return {res->status, Json::parse(res->body)};
}

template <class Pred>
bool eventually(Pred pred, std::chrono::milliseconds limit = 10s)
{
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(20ms);
    }
    return pred();
}

std::string item_for(std::uint16_t port, const std::string& transition)
{
    const auto view = get(port, "/worklist").body;
    for (const auto& item : view["items"]) {
        if (item["transition"] == transition) return item["id"];
    }
    return {};
}

/// Collects the raw event stream of one node on a background thread.
struct StreamReader {
    std::mutex mutex;
    std::string text;
    std::atomic<bool> stop{false};
    std::thread thread;

    explicit StreamReader(std::uint16_t port)
    {
        thread = std::thread([this, port] {
            httplib::Client cli("127.0.0.1", port);
            cli.Get("/events", [this](const char* data, std::size_t len) {
                std::lock_guard lock(mutex);
                text.append(data, len);
                return !stop.load();
            });
        });
    }
    ~StreamReader()
    {
        stop = true;
        thread.join();
    }
    std::string snapshot()
    {
        std::lock_guard lock(mutex);
        return text;
    }
};

} // namespace

TEST_CASE("daemon: API basics on a lone node")
{
    TempDir dir;
    Daemon d(config("n1", dir, {}), keys("n1"));
    d.start();
    const auto port = d.api_port();

    auto head = get(port, "/chain/head");
    CHECK(head.status == 200);
    CHECK(head.body["height"] == 0);
    CHECK(head.body["hash"] == chain::Block::genesis("test").hash.hex());

    CHECK(get(port, "/nothing/here").status == 404);
    CHECK(get(port, "/nothing/here").body["code"] == "NotFound");
    CHECK(get(port, "/chain/blocks?from=xyz").status == 400);
    CHECK(get(port, "/chain/blocks?from=" + Digest::zero().hex()).status == 404);
    CHECK(get(port, "/chain/blocks").body["blocks"].size() == 1);

    auto bad = post(port, "/models", "{not json");
    CHECK(bad.status == 400);
    CHECK(bad.body["code"] == "MalformedRequest");
    CHECK(post(port, "/models", R"({"name":"x","value":1.5})").status == 400);
    CHECK(post(port, "/models", R"({"name":"x"})").body["code"] == "MalformedModel");
    CHECK(post(port, "/cases", R"({"case":"x"})").status == 400);
    auto unknown = post(port, "/cases", R"({"model":"SEQ"})");
    CHECK(unknown.status == 409);
    CHECK(unknown.body["reason"] == "UnknownModel");
    CHECK(post(port, "/worklist/n1-w1/complete", R"({"outputs":{}})").status == 404);

    // GET /worklist is the worklist's own view.
    const auto view = get(port, "/worklist");
    CHECK(view.status == 200);
    CHECK(view.body == d.call([](node::Node& n) { return n.worklist().list_view(); }));
    CHECK(get(port, "/transactions/pending").body["pending"].empty());
    d.stop();
}

TEST_CASE("daemon: 503 until the first sync")
{
    TempDir dir;
    Daemon d(config("n1", dir, {{"n2", "127.0.0.1:1"}}), keys("n1"), 60s);
    d.start();
    CHECK(get(d.api_port(), "/worklist").status == 503);
    CHECK(get(d.api_port(), "/worklist").body["code"] == "NotSynced");
    CHECK(post(d.api_port(), "/cases", R"({"model":"SEQ"})").status == 503);
    CHECK(get(d.api_port(), "/chain/head").status == 200);
}

TEST_CASE("daemon: two live nodes run a case and stream events")
{
    TempDir dir;
    Daemon n2(config("n2", dir, {{"n1", "127.0.0.1:1"}}), keys("n2"));
    n2.start();
    Daemon n1(config("n1", dir, {{"n2", "127.0.0.1:" + std::to_string(n2.p2p_port())}}), keys("n1"));
    n1.start();
    const auto p1 = n1.api_port();
    const auto p2 = n2.api_port();
    REQUIRE(eventually([&] { return get(p1, "/chain/head").body["synced"] == true; }));
    REQUIRE(eventually([&] { return get(p2, "/chain/head").body["synced"] == true; }));

    StreamReader stream(p2);
    REQUIRE(eventually([&] { return n2.events().subscribers() == 1; }));

    const auto mine = [&](Daemon& d) { d.call([](node::Node& n) { return n.mine_block(); }); };
    const auto converged = [&] { return get(p1, "/chain/head").body["hash"] == get(p2, "/chain/head").body["hash"]; };

    auto r = post(p1, "/models", seq_model().dump());
    REQUIRE(r.status == 202);
    mine(n1);
    mine(n1);
    REQUIRE(eventually(converged));
    REQUIRE(eventually([&] { return get(p2, "/models").body["models"].size() == 1; }));

    r = post(p1, "/cases", R"({"case_id":"case-live","model":"SEQ"})");
    REQUIRE(r.status == 202);
    CHECK(r.body["case_id"] == "case-live");
    REQUIRE(eventually([&] { return n2.call([](node::Node& n) { return n.chain().pool().size(); }) == 1; }));
    mine(n2);
    mine(n2);
    REQUIRE(eventually(converged));

    std::string a;
    REQUIRE(eventually([&] { return !(a = item_for(p1, "A")).empty(); }));
    r = post(p1, "/worklist/" + a + "/complete", R"({"outputs":{"x":3}})");
    REQUIRE(r.status == 202);
    REQUIRE(eventually([&] {
        const auto pending = get(p2, "/transactions/pending").body["pending"];
        return pending.size() == 1 && pending[0]["status"] == "Pending";
    }));
    mine(n1);
    REQUIRE(eventually([&] {
        const auto pending = get(p2, "/transactions/pending").body["pending"];
        return pending.size() == 1 && pending[0]["status"] == "Mined" && pending[0]["depth"] == 0;
    }));
    mine(n1);
    std::string b;
    REQUIRE(eventually([&] { return !(b = item_for(p2, "B")).empty(); }));
    CHECK(post(p2, "/worklist/" + b + "/complete", R"({"outputs":{"status":7}})").status == 409);
    CHECK(post(p2, "/worklist/" + b + "/complete", R"({"outputs":{"status":"ok"}})").status == 202);

    REQUIRE(eventually([&] { return stream.snapshot().find("event: alert") != std::string::npos; }));
    const auto text = stream.snapshot();
    CHECK(text.find("event: HeadAdvanced\ndata: {") != std::string::npos);
    CHECK(text.find("event: worklist\n") != std::string::npos);
    CHECK(text.find("\"kind\":\"rejected\"") != std::string::npos);
    CHECK(text.find("event: worklist", text.find("event: HeadAdvanced")) != std::string::npos);
    n1.stop();
    n2.stop();
}

TEST_CASE("daemon: deferred-choice loser gets 409 over HTTP")
{
    TempDir dir;
    Daemon n2(config("n2", dir, {{"n1", "127.0.0.1:1"}}, 0), keys("n2"));
    n2.start();
    Daemon n1(config("n1", dir, {{"n2", "127.0.0.1:" + std::to_string(n2.p2p_port())}}, 0), keys("n1"));
    n1.start();
    const auto p1 = n1.api_port();
    const auto p2 = n2.api_port();
    REQUIRE(eventually([&] { return get(p2, "/chain/head").body["synced"] == true; }));
    const auto mine = [&](Daemon& d) { d.call([](node::Node& n) { return n.mine_block(); }); };
    const auto height = [&](std::uint16_t p) { return get(p, "/chain/head").body["height"].get<int>(); };

    REQUIRE(post(p1, "/models", dc_model().dump()).status == 202);
    mine(n1);
    REQUIRE(eventually([&] { return height(p2) == 1; }));
    REQUIRE(post(p1, "/cases", R"({"case_id":"race","model":"DC"})").status == 202);
    REQUIRE(eventually([&] { return n1.call([](node::Node& n) { return n.chain().pool().size(); }) == 1; }));
    mine(n1);
    REQUIRE(eventually([&] { return height(p2) == 2; }));

    std::string a, b;
    REQUIRE(eventually([&] { return !(a = item_for(p1, "A")).empty() && !(b = item_for(p2, "B")).empty(); }));
    REQUIRE(post(p1, "/worklist/" + a + "/complete", R"({"outputs":{"choice":"A"}})").status == 202);
    REQUIRE(eventually([&] { return n2.call([](node::Node& n) { return n.chain().pool().size(); }) == 1; }));
    const auto lost = post(p2, "/worklist/" + b + "/complete", R"({"outputs":{"choice":"B"}})");
    CHECK(lost.status == 409);
    CHECK(lost.body["code"] == "InvalidWorkflowAction");
    CHECK(lost.body["reason"].get<std::string>().starts_with("NotEnabled"));
    CHECK(item_for(p2, "B") == b); // retained
}
