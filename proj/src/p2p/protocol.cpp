#include <wfchain/p2p/protocol.hpp>

namespace wfchain::p2p {

bool PeerTable::add(const PeerInfo& peer)
{
    if (peer.name == self_) return false;
    auto [it, inserted] = entries_.try_emplace(peer.name, Entry{peer});
    if (!inserted && !peer.address.empty()) it->second.info.address = peer.address;
    return true;
}

void PeerTable::merge(const std::vector<PeerInfo>& peers, const Membership& members)
{
    for (const auto& p : peers) {
        const auto* key = members.find(p.name);
        if (key != nullptr && *key == p.key) add(p);
    }
}

const PeerInfo* PeerTable::find(const std::string& name) const
{
    const auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second.info;
}

std::vector<PeerInfo> PeerTable::list() const
{
    std::vector<PeerInfo> out;
    for (const auto& [_, e] : entries_) out.push_back(e.info);
    return out;
}

void PeerTable::set_connected(const std::string& name, bool up)
{
    if (const auto it = entries_.find(name); it != entries_.end()) it->second.connected = up;
}

bool PeerTable::connected(const std::string& name) const
{
    const auto it = entries_.find(name);
    return it != entries_.end() && it->second.connected;
}

std::vector<std::string> PeerTable::connected_peers() const
{
    std::vector<std::string> out;
    for (const auto& [name, e] : entries_) {
        if (e.connected) out.push_back(name);
    }
    return out;
}

Protocol::Protocol(const NodeIdentity& self, chain::Chain& chain, const Membership& members, PeerTable& peers)
    : self_(self), chain_(chain), members_(members), peers_(peers)
{
}

void Protocol::send(const std::string& to, Payload payload)
{
    outbound_.push_back({to, make_message(self_, std::move(payload))});
}

std::vector<Outbound> Protocol::take_outbound()
{
    return std::exchange(outbound_, {});
}

void Protocol::on_connected(const std::string& peer)
{
    send(peer, PeersRequest{});
    send(peer, BlockchainRequest{chain_.head().hash});
    send(peer, TransactionPoolRequest{});
}

void Protocol::on_stored(const chain::Block& block)
{
    if (!seen_blocks_.insert(block.hash).second) return;
    for (const auto& peer : peers_.connected_peers()) {
        if (peer == current_sender_) continue;
        send(peer, BlockSend{block});
        ++stats_.relayed_blocks;
    }
}

void Protocol::announce_transaction(const chain::Transaction& tx, const std::string& except)
{
    if (!seen_txs_.insert(tx.id()).second) return;
    for (const auto& peer : peers_.connected_peers()) {
        if (peer == except) continue;
        send(peer, TransactionSend{tx});
        ++stats_.relayed_txs;
    }
}

void Protocol::handle_events(const std::vector<chain::ChainEvent>& events, const std::string& from)
{
    for (const auto& ev : events) {
        if (const auto* o = std::get_if<chain::OrphanHeld>(&ev)) {
            send(from, BlockRequest{o->missing});
            ++stats_.block_requests;
        }
    }
}

std::vector<chain::ChainEvent> Protocol::dispatch(const Message& msg)
{
    ++stats_.dispatched;
    std::vector<chain::ChainEvent> events;
    const auto& from = msg.sender;
    current_sender_ = from;
    const auto receive = [&](const chain::Block& block) {
        if (chain_.knows_block(block.hash)) return;
        auto evs = chain_.receive_block(block);
        handle_events(evs, from);
        events.insert(events.end(), std::make_move_iterator(evs.begin()), std::make_move_iterator(evs.end()));
    };
    const auto submit = [&](const chain::Transaction& tx) {
        if (seen_txs_.contains(tx.id())) return;
        const auto res = chain_.submit_transaction(tx);
        if (res.status == chain::SubmitStatus::Accepted) announce_transaction(tx, from);
    };

    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BlockRequest>) {
                if (const auto* b = chain_.find_block(p.hash)) send(from, BlockSend{*b});
            } else if constexpr (std::is_same_v<T, BlockSend>) {
                receive(p.block);
            } else if constexpr (std::is_same_v<T, PeersRequest>) {
                auto list = peers_.list();
                std::erase_if(list, [&](const PeerInfo& info) { return info.name == from; });
                send(from, PeersSend{std::move(list)});
            } else if constexpr (std::is_same_v<T, PeersSend>) {
                peers_.merge(p.peers, members_);
            } else if constexpr (std::is_same_v<T, TransactionSend>) {
                submit(p.tx);
            } else if constexpr (std::is_same_v<T, TransactionPoolRequest>) {
                send(from, TransactionPoolSend{chain_.pool()});
            } else if constexpr (std::is_same_v<T, TransactionPoolSend>) {
                for (const auto& tx : p.txs) submit(tx);
            } else if constexpr (std::is_same_v<T, BlockchainRequest>) {
                // A side-branch head is answered from its fork point.
                Digest from_hash = p.from_hash;
                for (const auto* b = chain_.find_block(from_hash); b != nullptr && !chain_.on_main_branch(b->hash);
                     b = chain_.get_predecessor(b->hash)) {
                    from_hash = b->prev_hash;
                }
                BlockchainSend reply;
                for (const auto& b : chain_.chain_from(from_hash)) reply.blocks.push_back(*b);
                send(from, std::move(reply)); // an empty reply tells the requester it is in sync
            } else if constexpr (std::is_same_v<T, BlockchainSend>) {
                for (const auto& b : p.blocks) receive(b);
            }
        },
        msg.payload);
    current_sender_.clear();
    return events;
}

} // namespace wfchain::p2p
