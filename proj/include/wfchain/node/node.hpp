#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <wfchain/chain/block_log.hpp>
#include <wfchain/core/random.hpp>
#include <wfchain/node/config.hpp>
#include <wfchain/p2p/protocol.hpp>
#include <wfchain/worklist/worklist.hpp>

namespace wfchain::node {

struct NodeSettings {
    NodeIdentity identity;
    std::string network_id = "wfchain";
    Membership members;
    std::vector<p2p::PeerInfo> peers;
    engine::Design design = engine::Design::Actions;
    unsigned confirmation_depth = 2;
    unsigned difficulty = 16;
    std::map<std::string, HandlerSpec> handlers;
    std::optional<std::filesystem::path> data_dir; // block log; none in simulation
    std::uint64_t seed = 0;                         // case ids

    static NodeSettings from_config(const NodeConfig& config, KeyPair keys);
};

/// Something a stream subscriber is told about.
struct NodeEvent {
    std::string name; // chain event type | worklist | alert | handler | synced
    Json data;
};

/// Outcome of a user action, shaped like an HTTP reply.
struct ActionResult {
    int status = 202;
    Json body = Json::object();

    bool ok() const { return status < 300; }
    static ActionResult error(int status, std::string code, std::string reason);
};

/// One chain node with its engine, worklist and gossip protocol. Single
/// threaded: the simulator drives it directly, the daemon from its loop.
class Node {
public:
    explicit Node(NodeSettings settings);
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    const std::string& name() const { return settings_.identity.name; }
    const NodeSettings& settings() const { return settings_; }
    chain::Chain& chain() { return *chain_; }
    const chain::Chain& chain() const { return *chain_; }
    const engine::WorkflowEngine& engine() const { return *engine_; }
    const worklist::Worklist& worklist() const { return *worklist_; }
    p2p::PeerTable& peers() { return peers_; }
    const p2p::Protocol& protocol() const { return *protocol_; }

    /// Handles an inbound message; returns the chain events it caused.
    std::vector<chain::ChainEvent> receive(const p2p::Message& msg);
    void peer_up(const std::string& peer);
    void peer_down(const std::string& peer);
    std::vector<p2p::Outbound> take_outbound() { return protocol_->take_outbound(); }

    /// One bounded proof-of-work attempt on the current template.
    std::vector<chain::ChainEvent> mine_step(std::uint64_t budget, bool* found = nullptr);
    /// Grinds until a block is found.
    std::vector<chain::ChainEvent> mine_block();

    ActionResult submit_model(const Json& model_doc);
    ActionResult launch_case(const std::string& model, const std::optional<std::string>& case_id = {});
    ActionResult complete_item(const std::string& item_id, const Json& outputs);
    /// Completes the live item for (case, transition).
    ActionResult complete(const std::string& case_id, const std::string& transition, const Json& outputs);

    /// Runs handlers of automated items that appeared since the last call.
    void run_handlers();

    std::vector<NodeEvent> take_events() { return std::exchange(events_, {}); }

    bool synced() const { return synced_; }
    void mark_synced();

    /// GET-style views.
    Json models_json() const;
    Json cases_json() const;
    Json head_json() const;
    /// Main-branch blocks above `from` plus side-branch and orphan summaries;
    /// nullopt when `from` is not a known block.
    std::optional<Json> blocks_json(const std::optional<Digest>& from) const;
    Json pending_json() const;

private:
    void after(const std::vector<chain::ChainEvent>& events);
    ActionResult submit_local(const Json& body, const std::string& item_id);
    void load_log();

    NodeSettings settings_;
    std::unique_ptr<engine::WorkflowEngine> engine_;
    std::unique_ptr<chain::Chain> chain_;
    std::unique_ptr<worklist::Worklist> worklist_;
    p2p::PeerTable peers_;
    std::unique_ptr<p2p::Protocol> protocol_;
    std::unique_ptr<chain::BlockLog> log_;
    Rng rng_;
    std::vector<NodeEvent> events_;
    std::uint64_t alert_seq_ = 0;
    std::uint64_t worklist_revision_ = 0;
    bool synced_ = false;
};

} // namespace wfchain::node
