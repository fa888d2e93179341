#pragma once

#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <wfchain/chain/chain.hpp>
#include <wfchain/p2p/message.hpp>

namespace wfchain::p2p {

/// Known peers of one node. Never lists the node itself; unique by name.
class PeerTable {
public:
    explicit PeerTable(std::string self) : self_(std::move(self)) {}

    /// False for self; an existing entry keeps its key and takes the new address.
    bool add(const PeerInfo& peer);
    /// Adopts entries for configured members whose key matches.
    void merge(const std::vector<PeerInfo>& peers, const Membership& members);

    const PeerInfo* find(const std::string& name) const;
    std::vector<PeerInfo> list() const;

    void set_connected(const std::string& name, bool up);
    bool connected(const std::string& name) const;
    std::vector<std::string> connected_peers() const;

private:
    struct Entry {
        PeerInfo info;
        bool connected = false;
    };
    std::string self_;
    std::map<std::string, Entry> entries_;
};

struct Outbound {
    std::string to;
    Message msg;
};

/// Inbound message handling and gossip for one node. Not thread-safe; every
/// call happens on the node's event loop. Replies and relays are queued and
/// collected with take_outbound().
class Protocol {
public:
    Protocol(const NodeIdentity& self, chain::Chain& chain, const Membership& members, PeerTable& peers);

    /// Routes a verified message to the chain and queues any replies.
    std::vector<chain::ChainEvent> dispatch(const Message& msg);

    /// Sync requests sent when a connection comes up.
    void on_connected(const std::string& peer);

    /// To be called for every block entering the local store; relays it once
    /// to all connected peers except the one it came from.
    void on_stored(const chain::Block& block);
    /// Relays a transaction once to all connected peers except `except`.
    void announce_transaction(const chain::Transaction& tx, const std::string& except = {});

    std::vector<Outbound> take_outbound();

    struct Stats {
        std::uint64_t dispatched = 0;
        std::uint64_t block_requests = 0;
        std::uint64_t relayed_blocks = 0;
        std::uint64_t relayed_txs = 0;
    };
    const Stats& stats() const { return stats_; }

private:
    void send(const std::string& to, Payload payload);
    void handle_events(const std::vector<chain::ChainEvent>& events, const std::string& from);

    const NodeIdentity& self_;
    chain::Chain& chain_;
    const Membership& members_;
    PeerTable& peers_;
    std::unordered_set<Digest, DigestHash> seen_blocks_;
    std::unordered_set<Digest, DigestHash> seen_txs_;
    std::string current_sender_;
    std::vector<Outbound> outbound_;
    Stats stats_;
};

} // namespace wfchain::p2p
