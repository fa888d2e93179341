#include <wfchain/worklist/worklist.hpp>

#include <set>

namespace wfchain::worklist {

namespace {

constexpr std::size_t kAlertCapacity = 512;
constexpr std::size_t kUndoneCapacity = 64;

} // namespace

std::string_view to_string(Status s)
{
    static constexpr std::string_view names[] = {"Worklisted", "PendingInPool", "Mined", "Confirmed",
                                                  "Rejected",   "Undone",        "Withdrawn"};
    return names[static_cast<int>(s)];
}

std::string_view to_string(Severity s)
{
    static constexpr std::string_view names[] = {"info", "warn", "alert"};
    return names[static_cast<int>(s)];
}

Json WorkItem::to_json() const
{
    Json out = {{"id", id},         {"case_id", case_id}, {"model", model},
                {"transition", transition}, {"inputs", inputs}, {"status", to_string(status)},
                {"enabled_at", enabled_at.hex()}};
    if (status == Status::Mined) out["depth"] = depth;
    if (!reason.empty()) out["reason"] = reason;
    if (notice) out["notice"] = *notice;
    if (tx) out["tx"] = tx->hex();
    if (handler) out["handler"] = *handler;
    return out;
}

Json AlertRecord::to_json() const
{
    Json out = {{"seq", seq}, {"severity", to_string(severity)}, {"kind", kind}, {"message", message}};
    if (!case_id.empty()) out["case_id"] = case_id;
    if (!item.empty()) out["item"] = item;
    if (!tx.empty()) out["tx"] = tx;
    return out;
}

Worklist::Worklist(std::string node, engine::Design design, unsigned depth, const chain::Chain& chain)
    : node_(std::move(node)), depth_(depth), chain_(chain), visible_(engine::make_engine(design, node_))
{
    visible_->set_block_source(&chain_);
    visible_hash_ = chain_.genesis().hash;
    sync();
}

const chain::Block& Worklist::visible_block() const
{
    return *chain_.find_block(visible_hash_);
}

void Worklist::on_chain_events(const std::vector<chain::ChainEvent>& events)
{
    std::vector<const chain::Reorganized*> reorgs;
    for (const auto& ev : events) {
        if (const auto* r = std::get_if<chain::Reorganized>(&ev)) reorgs.push_back(r);
    }
    for (const auto* r : reorgs) {
        alert(Severity::Alert, "reorg",
              "chain reorganised: " + std::to_string(r->undone.size()) + " block(s) undone, " +
                  std::to_string(r->applied.size()) + " applied");
        std::set<Digest> dropped;
        for (const auto& tx : r->dropped) dropped.insert(tx.id());
        for (const auto& b : r->undone) {
            for (const auto& tx : b->transactions) {
                if (chain_.main_height_of(tx.id())) continue; // re-mined on the new branch
                Json entry = visible_->describe_pending(tx);
                entry["status"] = "Undone";
                entry["fate"] = dropped.contains(tx.id()) ? "dropped" : "returned";
                entry["block"] = b->hash.hex();
                undone_.push_back(std::move(entry));
                if (undone_.size() > kUndoneCapacity) undone_.pop_front();
            }
        }
    }
    // Remember which tracked transactions were mined before statuses move.
    std::map<Digest, Status> before;
    for (const auto& [id, t] : tracked_) before[id] = t.status;
    sync();
    for (const auto& [id, t] : tracked_) {
        const auto prev = before.find(id);
        if (prev == before.end() || prev->second == t.status) continue;
        const bool was_mined = prev->second == Status::Mined || prev->second == Status::Confirmed;
        const auto c = engine::WorkflowEngine::case_of(t.tx).value_or("");
        if (was_mined && t.status == Status::PendingInPool) {
            alert(Severity::Alert, "undone", "transaction returned to the pool after reorganisation", c, t.item,
                  id.hex());
        } else if (t.status == Status::Undone) {
            alert(Severity::Alert, "undone", "transaction undone by reorganisation", c, t.item, id.hex());
        } else if (t.status == Status::Rejected) {
            alert(Severity::Warn, "dropped", "pending transaction no longer valid and dropped from the pool", c,
                  t.item, id.hex());
        }
    }
}

void Worklist::on_pool_result(const std::string& item_id, const chain::Transaction& tx,
                              const chain::SubmitResult& result)
{
    auto* item = find_mut(item_id);
    if (item == nullptr) return;
    if (!result.accepted()) {
        note_rejection(item_id, result.reason.empty() ? result.code : result.reason, result.detail, tx.id().hex());
        return;
    }
    item->notice.reset();
    item->tx = tx.id();
    tracked_[tx.id()] = Tracked{tx, item_id};
    alert(Severity::Info, "pending", "completion of " + item->transition + " is pending", item->case_id, item->id,
          tx.id().hex());
    sync();
}

void Worklist::note_rejection(const std::string& item_id, const std::string& reason, const std::string& detail,
                              const std::string& tx)
{
    auto* item = find_mut(item_id);
    if (item == nullptr) return;
    item->notice = reason;
    if (!detail.empty()) *item->notice += ": " + detail;
    item->attempted_rejected = true;
    alert(Severity::Warn, "rejected", "completion of " + item->transition + " rejected: " + *item->notice,
          item->case_id, item->id, tx);
    ++revision_;
}

void Worklist::track(const chain::Transaction& tx, const chain::SubmitResult& result)
{
    const auto c = engine::WorkflowEngine::case_of(tx).value_or("");
    if (!result.accepted()) {
        alert(Severity::Warn, "rejected", tx.type() + " rejected: " + result.reason, c, {}, tx.id().hex());
        ++revision_;
        return;
    }
    tracked_.try_emplace(tx.id(), Tracked{tx, {}});
    alert(Severity::Info, "pending", tx.type() + " is pending", c, {}, tx.id().hex());
    sync();
}

std::optional<std::pair<Status, std::uint64_t>> Worklist::chain_status(const Digest& tx_id) const
{
    if (const auto h = chain_.main_height_of(tx_id)) {
        const auto d = chain_.height() - *h;
        return std::pair{d >= depth_ ? Status::Confirmed : Status::Mined, d};
    }
    if (chain_.in_pool(tx_id)) return std::pair{Status::PendingInPool, std::uint64_t{0}};
    return std::nullopt;
}

void Worklist::sync()
{
    advance_visible();
    refresh_tracked();
    reconcile_items();
    ++revision_;
}

void Worklist::advance_visible()
{
    const auto target_height = chain_.height() >= depth_ ? chain_.height() - depth_ : 0;
    const auto target = chain_.main_at(target_height);
    if (target->hash == visible_hash_) return;

    std::vector<chain::BlockPtr> undone;
    auto cursor = chain_.block_ptr(visible_hash_);
    while (!chain_.on_main_branch(cursor->hash) || cursor->height > target_height) {
        undone.push_back(cursor);
        cursor = chain_.block_ptr(cursor->prev_hash);
    }
    if (!undone.empty()) visible_->revert_blocks(undone, *cursor);
    for (auto h = cursor->height + 1; h <= target_height; ++h) visible_->apply_block(*chain_.main_at(h));
    visible_->drain_effects();
    visible_hash_ = target->hash;
}

void Worklist::refresh_tracked()
{
    for (auto& [id, t] : tracked_) {
        if (const auto s = chain_status(id)) {
            t.status = s->first;
            t.depth = s->second;
            if (t.status != Status::PendingInPool) t.mined_once = true;
        } else {
            t.status = t.mined_once ? Status::Undone : Status::Rejected;
        }
        if (t.item.empty()) continue;
        auto* item = find_mut(t.item);
        if (item == nullptr || item->terminal()) continue;
        item->status = t.status;
        item->depth = t.depth;
        if (t.status == Status::Undone) item->reason = "undone by reorganisation";
        if (t.status == Status::Rejected) item->reason = "dropped from pool";
    }
}

void Worklist::reconcile_items()
{
    // (case, transition) pairs locally enabled in the visible state.
    std::map<std::pair<std::string, std::string>, std::pair<engine::CaseInfo, const petri::Activity*>> enabled;
    for (const auto& c : visible_->cases()) {
        if (petri::case_status(*c.model, c.state.marking) != petri::CaseStatus::Running) continue;
        for (const auto& t : petri::enabled_transitions(*c.model, c.state.marking)) {
            const auto& act = c.model->at(t);
            if (act.actor == node_) enabled.emplace(std::pair{c.state.case_id, t}, std::pair{c, &act});
        }
    }
    for (auto& item : items_) {
        if (item.status != Status::Worklisted) continue;
        if (enabled.contains({item.case_id, item.transition})) continue;
        if (item.attempted_rejected) {
            item.status = Status::Rejected;
            item.reason = item.notice.value_or("rejected");
        } else {
            item.status = Status::Withdrawn;
            item.reason = "no longer enabled";
        }
    }
    for (const auto& [key, entry] : enabled) {
        if (live_item(key.first, key.second) != nullptr) continue;
        const auto& [c, act] = entry;
        WorkItem item;
        item.id = node_ + "-w" + std::to_string(++next_item_);
        item.case_id = key.first;
        item.model = c.model->name();
        item.transition = key.second;
        item.handler = act->handler;
        item.enabled_at = visible_hash_;
        petri::Values inputs;
        for (const auto& v : act->inputs) {
            if (const auto it = c.state.values.find(v); it != c.state.values.end()) inputs.emplace(v, it->second);
        }
        item.inputs = petri::values_to_json(inputs);
        item_index_[item.id] = items_.size();
        if (item.handler) automatic_.push_back(items_.size());
        items_.push_back(std::move(item));
    }
}

const WorkItem* Worklist::live_item(const std::string& case_id, const std::string& transition) const
{
    for (auto it = items_.rbegin(); it != items_.rend(); ++it) {
        if (it->case_id == case_id && it->transition == transition &&
            (it->status == Status::Worklisted || it->in_flight())) {
            return &*it;
        }
    }
    return nullptr;
}

const WorkItem* Worklist::find(const std::string& item_id) const
{
    const auto it = item_index_.find(item_id);
    return it == item_index_.end() ? nullptr : &items_[it->second];
}

WorkItem* Worklist::find_mut(const std::string& item_id)
{
    const auto it = item_index_.find(item_id);
    return it == item_index_.end() ? nullptr : &items_[it->second];
}

std::vector<WorkItem> Worklist::actionable() const
{
    std::vector<WorkItem> out;
    for (const auto& item : items_) {
        if (item.status == Status::Worklisted) out.push_back(item);
    }
    return out;
}

std::optional<Status> Worklist::status_of(const Digest& tx_id) const
{
    const auto it = tracked_.find(tx_id);
    if (it == tracked_.end()) return std::nullopt;
    return it->second.status;
}

std::vector<WorkItem> Worklist::take_automatic()
{
    std::vector<WorkItem> out;
    for (const auto i : automatic_) {
        if (items_[i].status == Status::Worklisted) out.push_back(items_[i]);
    }
    automatic_.clear();
    return out;
}

std::vector<AlertRecord> Worklist::alerts_since(std::uint64_t seq) const
{
    std::vector<AlertRecord> out;
    for (const auto& a : alerts_) {
        if (a.seq > seq) out.push_back(a);
    }
    return out;
}

void Worklist::alert(Severity s, std::string kind, std::string message, std::string case_id, std::string item,
                     std::string tx)
{
    alerts_.push_back({++next_alert_, s, std::move(kind), std::move(message), std::move(case_id), std::move(item),
                       std::move(tx)});
    if (alerts_.size() > kAlertCapacity) alerts_.pop_front();
}

Json Worklist::list_view(const ListFilter& filter) const
{
    const auto matches = [&](const std::string& case_id) { return !filter.case_id || *filter.case_id == case_id; };

    Json items = Json::array();
    Json history = Json::array();
    for (const auto& item : items_) {
        if (!matches(item.case_id)) continue;
        if (item.status == Status::Worklisted) {
            items.push_back(item.to_json());
        } else if (filter.history) {
            history.push_back(item.to_json());
        }
    }

    Json pending = Json::array();
    for (const auto& tx : chain_.pool()) {
        if (!matches(engine::WorkflowEngine::case_of(tx).value_or(""))) continue;
        Json entry = visible_->describe_pending(tx);
        entry["status"] = "Pending";
        entry["depth"] = 0;
        entry["confirmation_depth"] = depth_;
        entry["local"] = tracked_.contains(tx.id());
        pending.push_back(std::move(entry));
    }
    const auto head = chain_.height();
    for (std::uint64_t d = 0; d < depth_ && d < head; ++d) {
        const auto block = chain_.main_at(head - d);
        for (const auto& tx : block->transactions) {
            if (!matches(engine::WorkflowEngine::case_of(tx).value_or(""))) continue;
            Json entry = visible_->describe_pending(tx);
            entry["status"] = "Mined";
            entry["depth"] = d;
            entry["confirmation_depth"] = depth_;
            entry["block"] = block->hash.hex();
            entry["local"] = tracked_.contains(tx.id());
            pending.push_back(std::move(entry));
        }
    }
    Json undone = Json::array();
    for (const auto& entry : undone_) {
        if (matches(entry.value("case_id", std::string{}))) undone.push_back(entry);
    }

    Json cases = Json::array();
    for (const auto& c : visible_->cases()) {
        if (!matches(c.state.case_id)) continue;
        Json entry = c.state.to_json();
        entry["status"] = petri::to_string(petri::case_status(*c.model, c.state.marking));
        cases.push_back(std::move(entry));
    }

    Json alerts = Json::array();
    const auto skip = alerts_.size() > filter.alerts ? alerts_.size() - filter.alerts : 0;
    for (std::size_t i = skip; i < alerts_.size(); ++i) alerts.push_back(alerts_[i].to_json());

    const auto& vb = visible_block();
    Json out = {{"node", node_},
                {"confirmation_depth", depth_},
                {"head", {{"height", head}, {"hash", chain_.head().hash.hex()}}},
                {"visible", {{"height", vb.height}, {"hash", vb.hash.hex()}}},
                {"items", std::move(items)},
                {"pending", std::move(pending)},
                {"undone", std::move(undone)},
                {"cases", std::move(cases)},
                {"alerts", std::move(alerts)},
                {"revision", revision_}};
    if (filter.history) out["history"] = std::move(history);
    return out;
}

} // namespace wfchain::worklist
