#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <wfchain/engine/engine.hpp>

namespace wfchain::worklist {

enum class Status { Worklisted, PendingInPool, Mined, Confirmed, Rejected, Undone, Withdrawn };

std::string_view to_string(Status s);

struct WorkItem {
    std::string id;
    std::string case_id;
    std::string model;
    std::string transition;
    Json inputs = Json::object();
    std::optional<std::string> handler;
    Status status = Status::Worklisted;
    std::uint64_t depth = 0;       // while Mined
    std::string reason;            // Rejected / Undone / Withdrawn
    std::optional<std::string> notice; // last pool rejection, item stays Worklisted
    std::optional<Digest> tx;
    Digest enabled_at;             // visible block at which the item appeared
    bool attempted_rejected = false;

    bool in_flight() const { return status == Status::PendingInPool || status == Status::Mined; }
    bool terminal() const
    {
        return status == Status::Rejected || status == Status::Undone || status == Status::Withdrawn;
    }
    Json to_json() const;
};

enum class Severity { Info, Warn, Alert };

std::string_view to_string(Severity s);

struct AlertRecord {
    std::uint64_t seq = 0;
    Severity severity = Severity::Info;
    std::string kind; // pending | rejected | dropped | undone | reorg
    std::string message;
    std::string case_id;
    std::string item;
    std::string tx;

    Json to_json() const;
};

/// Transaction submitted by this node and followed through its stages.
struct Tracked {
    chain::Transaction tx;
    std::string item; // empty for launches and model updates
    Status status = Status::PendingInPool;
    std::uint64_t depth = 0;
    bool mined_once = false;
};

struct ListFilter {
    std::optional<std::string> case_id;
    bool history = false;
    std::size_t alerts = 20;
};

/// Work items of one node. The visible state is the engine state at K blocks
/// below the head; only it creates and withdraws work items. The chain's own
/// engine (validation state) is used for drafting and never consulted here.
class Worklist {
public:
    Worklist(std::string node, engine::Design design, unsigned depth, const chain::Chain& chain);

    const std::string& node() const { return node_; }
    unsigned depth() const { return depth_; }
    const engine::WorkflowEngine& visible() const { return *visible_; }
    const chain::Block& visible_block() const;

    /// Brings statuses and the visible state up to date with the chain and
    /// records alerts for the given events.
    void on_chain_events(const std::vector<chain::ChainEvent>& events);
    /// Result of a completion attempt for an item.
    void on_pool_result(const std::string& item_id, const chain::Transaction& tx, const chain::SubmitResult& result);
    /// A completion attempt failed before reaching the pool; the item stays Worklisted.
    void note_rejection(const std::string& item_id, const std::string& reason, const std::string& detail = {},
                        const std::string& tx = {});
    /// Follows a locally submitted launch or model update.
    void track(const chain::Transaction& tx, const chain::SubmitResult& result);

    const WorkItem* find(const std::string& item_id) const;
    /// Live (non-terminal) item for the pair, if any.
    const WorkItem* live_item(const std::string& case_id, const std::string& transition) const;
    std::vector<WorkItem> actionable() const;
    const std::vector<WorkItem>& all_items() const { return items_; }
    std::optional<Status> status_of(const Digest& tx_id) const;

    /// Items that appeared since the last call and carry a handler.
    std::vector<WorkItem> take_automatic();

    std::vector<AlertRecord> alerts_since(std::uint64_t seq) const;
    std::uint64_t revision() const { return revision_; }

    /// Immutable snapshot: actionable items, pending and mined transactions
    /// with depth against K, visible cases and recent alerts.
    Json list_view(const ListFilter& filter = {}) const;

private:
    void sync();
    void advance_visible();
    void refresh_tracked();
    void reconcile_items();
    std::optional<std::pair<Status, std::uint64_t>> chain_status(const Digest& tx_id) const;
    void alert(Severity s, std::string kind, std::string message, std::string case_id = {}, std::string item = {},
               std::string tx = {});
    WorkItem* find_mut(const std::string& item_id);

    std::string node_;
    unsigned depth_;
    const chain::Chain& chain_;
    std::unique_ptr<engine::WorkflowEngine> visible_;
    Digest visible_hash_;

    std::vector<WorkItem> items_;
    std::map<std::string, std::size_t> item_index_;
    std::map<Digest, Tracked> tracked_;
    std::vector<std::size_t> automatic_;
    std::deque<AlertRecord> alerts_;
    std::deque<Json> undone_;
    std::uint64_t next_item_ = 0;
    std::uint64_t next_alert_ = 0;
    std::uint64_t revision_ = 0;
};

} // namespace wfchain::worklist
