#include <wfchain/node/node.hpp>

#include <set>

#include <wfchain/node/handler.hpp>

namespace wfchain::node {

namespace {

std::uint64_t name_seed(const std::string& name, std::uint64_t seed)
{
    const auto d = digest(name);
    std::uint64_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | d.bytes()[i];
    return h ^ seed;
}

Json block_summary(const chain::Block& b)
{
    return {{"hash", b.hash.hex()},
            {"prev_hash", b.prev_hash.hex()},
            {"height", b.height},
            {"miner", b.miner},
            {"transactions", b.transactions.size()}};
}

} // namespace

NodeSettings NodeSettings::from_config(const NodeConfig& config, KeyPair keys)
{
    NodeSettings s;
    s.members = config.membership(keys.public_key());
    s.identity = NodeIdentity{config.name, std::move(keys), config.listen_p2p};
    s.network_id = config.network_id;
    s.peers = config.peers;
    s.design = config.design;
    s.confirmation_depth = config.confirmation_depth;
    s.difficulty = config.mining.difficulty;
    s.handlers = config.handlers;
    s.data_dir = config.data_dir;
    return s;
}

ActionResult ActionResult::error(int status, std::string code, std::string reason)
{
    return {status, {{"code", std::move(code)}, {"reason", std::move(reason)}}};
}

Node::Node(NodeSettings settings)
    : settings_(std::move(settings)),
      engine_(engine::make_engine(settings_.design, settings_.identity.name)),
      peers_(settings_.identity.name),
      rng_(name_seed(settings_.identity.name, settings_.seed))
{
    chain::ChainParams params;
    params.network_id = settings_.network_id;
    params.difficulty = settings_.difficulty;
    chain_ = std::make_unique<chain::Chain>(params, settings_.members, *engine_);
    engine_->set_block_source(chain_.get());
    worklist_ = std::make_unique<worklist::Worklist>(name(), settings_.design, settings_.confirmation_depth, *chain_);
    protocol_ = std::make_unique<p2p::Protocol>(settings_.identity, *chain_, settings_.members, peers_);
    for (const auto& p : settings_.peers) peers_.add(p);

    if (settings_.data_dir) load_log();
    chain_->set_store_hook([this](const chain::Block& b) {
        if (log_) log_->append(b);
        protocol_->on_stored(b);
    });
    synced_ = settings_.peers.empty();
    worklist_revision_ = worklist_->revision();
}

void Node::load_log()
{
    std::filesystem::create_directories(*settings_.data_dir);
    const auto path = *settings_.data_dir / "blocks.jsonl";
    if (std::filesystem::exists(path)) {
        std::vector<chain::ChainEvent> all;
        for (const auto& b : chain::BlockLog::load(path)) {
            auto evs = chain_->receive_block(b);
            all.insert(all.end(), evs.begin(), evs.end());
        }
        worklist_->on_chain_events(all);
        engine_->drain_effects();
    }
    log_ = std::make_unique<chain::BlockLog>(path);
}

void Node::after(const std::vector<chain::ChainEvent>& events)
{
    for (const auto& ev : events) {
        auto data = chain::event_to_json(ev);
        auto type = data["type"].get<std::string>();
        events_.push_back({std::move(type), std::move(data)});
    }
    worklist_->on_chain_events(events);
    engine_->drain_effects();
    if (worklist_->revision() != worklist_revision_) {
        worklist_revision_ = worklist_->revision();
        const auto& vb = worklist_->visible_block();
        events_.push_back({"worklist",
                           {{"revision", worklist_revision_},
                            {"head", {{"height", chain_->height()}, {"hash", chain_->head().hash.hex()}}},
                            {"visible", {{"height", vb.height}, {"hash", vb.hash.hex()}}},
                            {"actionable", worklist_->actionable().size()}}});
    }
    for (const auto& a : worklist_->alerts_since(alert_seq_)) {
        alert_seq_ = a.seq;
        events_.push_back({"alert", a.to_json()});
    }
}

std::vector<chain::ChainEvent> Node::receive(const p2p::Message& msg)
{
    const auto generation = chain_->generation();
    auto events = protocol_->dispatch(msg);
    if (!synced_ && std::holds_alternative<p2p::BlockchainSend>(msg.payload)) mark_synced();
    if (!events.empty() || chain_->generation() != generation) {
        after(events);
        run_handlers();
    }
    return events;
}

void Node::peer_up(const std::string& peer)
{
    peers_.set_connected(peer, true);
    protocol_->on_connected(peer);
}

void Node::peer_down(const std::string& peer)
{
    peers_.set_connected(peer, false);
}

void Node::mark_synced()
{
    if (synced_) return;
    synced_ = true;
    events_.push_back({"synced", {{"height", chain_->height()}, {"hash", chain_->head().hash.hex()}}});
}

std::vector<chain::ChainEvent> Node::mine_step(std::uint64_t budget, bool* found)
{
    auto r = chain_->mine_step(name(), budget);
    if (found != nullptr) *found = r.block.has_value();
    if (r.block) {
        after(r.events);
        run_handlers();
    }
    return std::move(r.events);
}

std::vector<chain::ChainEvent> Node::mine_block()
{
    while (true) {
        bool found = false;
        auto events = mine_step(1u << 16, &found);
        if (found) return events;
    }
}

ActionResult Node::submit_local(const Json& body, const std::string& item_id)
{
    Json signed_body = body;
    signed_body["nonce"] = std::to_string(rng_.next());
    auto tx = chain::Transaction::create(settings_.identity, std::move(signed_body));
    const auto res = chain_->submit_transaction(tx);
    if (item_id.empty()) {
        worklist_->track(tx, res);
    } else {
        worklist_->on_pool_result(item_id, tx, res);
    }
    if (res.status == chain::SubmitStatus::Accepted) protocol_->announce_transaction(tx);
    after({});
    if (!res.accepted()) {
        auto out = ActionResult::error(409, res.code, res.reason);
        if (!res.detail.empty()) out.body["detail"] = res.detail;
        out.body["tx"] = tx.id().hex();
        return out;
    }
    Json reply = {{"tx", tx.id().hex()}, {"status", "PendingInPool"}};
    if (!item_id.empty()) reply["item"] = item_id;
    if (const auto c = engine::WorkflowEngine::case_of(tx)) reply["case_id"] = *c;
    return {202, std::move(reply)};
}

ActionResult Node::submit_model(const Json& model_doc)
{
    Json body;
    try {
        body = engine_->draft_model_update(model_doc);
    } catch (const std::exception& e) {
        return ActionResult::error(400, "MalformedModel", e.what());
    }
    return submit_local(body, {});
}

ActionResult Node::launch_case(const std::string& model, const std::optional<std::string>& case_id)
{
    const auto id = case_id.value_or(rng_.uuid4());
    const auto draft = engine_->draft_launch(model, id, chain_->pool());
    if (!draft.body) {
        auto out = ActionResult::error(409, "InvalidWorkflowAction", draft.error.code);
        if (!draft.error.detail.empty()) out.body["detail"] = draft.error.detail;
        return out;
    }
    return submit_local(*draft.body, {});
}

ActionResult Node::complete_item(const std::string& item_id, const Json& outputs)
{
    const auto* item = worklist_->find(item_id);
    if (item == nullptr) return ActionResult::error(404, "UnknownWorkItem", item_id);
    if (item->status != worklist::Status::Worklisted) {
        return ActionResult::error(409, "ItemNotActionable",
                                   "item is " + std::string(worklist::to_string(item->status)));
    }
    if (!outputs.is_object()) return ActionResult::error(400, "MalformedRequest", "outputs must be an object");
    const auto draft = engine_->draft_completion(item->case_id, item->transition, outputs, chain_->pool());
    if (!draft.body) {
        worklist_->note_rejection(item_id, draft.error.code, draft.error.detail);
        after({});
        auto out = ActionResult::error(409, "InvalidWorkflowAction", draft.error.code);
        if (!draft.error.detail.empty()) out.body["detail"] = draft.error.detail;
        out.body["item"] = item_id;
        return out;
    }
    return submit_local(*draft.body, item_id);
}

ActionResult Node::complete(const std::string& case_id, const std::string& transition, const Json& outputs)
{
    const auto* item = worklist_->live_item(case_id, transition);
    if (item == nullptr) return ActionResult::error(404, "UnknownWorkItem", case_id + "/" + transition);
    return complete_item(item->id, outputs);
}

void Node::run_handlers()
{
    while (true) {
        const auto items = worklist_->take_automatic();
        if (items.empty()) return;
        for (const auto& item : items) {
            const auto spec = settings_.handlers.find(*item.handler);
            Json report = {{"item", item.id}, {"case_id", item.case_id}, {"transition", item.transition},
                           {"handler", *item.handler}};
            if (spec == settings_.handlers.end()) {
                report["ok"] = false;
                report["error"] = "no handler configured";
                events_.push_back({"handler", std::move(report)});
                continue;
            }
            auto outcome = invoke_handler(spec->second, item);
            if (!outcome.ok) {
                report["ok"] = false;
                report["error"] = outcome.error;
                events_.push_back({"handler", std::move(report)});
                continue;
            }
            const auto r = complete_item(item.id, outcome.outputs);
            report["ok"] = r.ok();
            report["result"] = r.body;
            events_.push_back({"handler", std::move(report)});
        }
    }
}

Json Node::models_json() const
{
    Json models = Json::array();
    for (const auto& m : worklist_->visible().models()) models.push_back(m->to_json());
    Json pending = Json::array();
    for (const auto& tx : chain_->pool()) {
        if (tx.type() == "ModelUpdate") pending.push_back(worklist_->visible().describe_pending(tx));
    }
    return {{"models", std::move(models)}, {"pending", std::move(pending)}};
}

Json Node::cases_json() const
{
    Json cases = Json::array();
    std::set<std::string> seen;
    for (const auto& c : worklist_->visible().cases()) {
        Json entry = c.state.to_json();
        entry["status"] = petri::to_string(petri::case_status(*c.model, c.state.marking));
        seen.insert(c.state.case_id);
        cases.push_back(std::move(entry));
    }
    // Launches not yet visible.
    const auto add_pending = [&](const chain::Transaction& tx, const char* stage) {
        const auto c = engine::WorkflowEngine::case_of(tx);
        if (!c || seen.contains(*c)) return;
        const auto model = tx.body().find("model");
        if (model == tx.body().end() || !model->is_string()) return;
        seen.insert(*c);
        cases.push_back({{"case_id", *c}, {"model", *model}, {"status", "Pending"}, {"stage", stage}});
    };
    const auto head = chain_->height();
    for (std::uint64_t d = 0; d < settings_.confirmation_depth && d < head; ++d) {
        for (const auto& tx : chain_->main_at(head - d)->transactions) add_pending(tx, "Mined");
    }
    for (const auto& tx : chain_->pool()) add_pending(tx, "PendingInPool");
    return {{"cases", std::move(cases)}};
}

Json Node::head_json() const
{
    const auto& h = chain_->head();
    return {{"height", h.height}, {"hash", h.hash.hex()}, {"block", h.to_json()}, {"synced", synced_}};
}

std::optional<Json> Node::blocks_json(const std::optional<Digest>& from) const
{
    if (from && !chain_->find_block(*from)) return std::nullopt;
    Json main = Json::array();
    if (!from) main.push_back(chain_->genesis().to_json());
    for (const auto& b : chain_->chain_from(from.value_or(chain_->genesis().hash))) main.push_back(b->to_json());
    Json side = Json::array();
    for (const auto& b : chain_->stored_blocks()) {
        if (!chain_->on_main_branch(b->hash)) side.push_back(block_summary(*b));
    }
    Json orphans = Json::array();
    for (const auto& b : chain_->orphans()) orphans.push_back(block_summary(*b));
    return Json{{"head", {{"height", chain_->height()}, {"hash", chain_->head().hash.hex()}}},
                {"blocks", std::move(main)},
                {"side_branches", std::move(side)},
                {"orphans", std::move(orphans)}};
}

Json Node::pending_json() const
{
    auto view = worklist_->list_view();
    return {{"confirmation_depth", settings_.confirmation_depth},
            {"head", view["head"]},
            {"pending", view["pending"]},
            {"undone", view["undone"]}};
}

} // namespace wfchain::node
