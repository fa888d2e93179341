#include <wfchain/engine/states.hpp>

#include <algorithm>

namespace wfchain::states {

using chain::Transaction;
using chain::Verdict;

namespace {

std::string str_field(const Transaction& tx, const char* name)
{
    const auto it = tx.body().find(name);
    return it != tx.body().end() && it->is_string() ? it->get<std::string>() : std::string{};
}

/// Decodes an InstanceState body against its model; throws on malformed content.
petri::CaseState parse_state(const Transaction& tx, const petri::WorkflowModel& model)
{
    const auto& body = tx.body();
    if (!body.contains("marking") || !body.contains("values")) {
        throw petri::ValueError("marking and values required");
    }
    petri::CaseState s;
    s.case_id = str_field(tx, "case_id");
    s.model = model.name();
    s.marking = petri::marking_from_json(body.at("marking"));
    for (const auto& [place, n] : s.marking) {
        if (!model.places().contains(place)) throw petri::ValueError("unknown place '" + place + "'");
    }
    s.values = model.values_from_json(body.at("values"));
    return s;
}

petri::ModelPtr latest_pending_model(std::span<const Transaction> pending, const std::string& name)
{
    petri::ModelPtr found;
    for (const auto& p : pending) {
        if (p.type() != "ModelUpdate" || p.body().at("model").value("name", "") != name) continue;
        try {
            found = std::make_shared<const petri::WorkflowModel>(petri::WorkflowModel::from_json(p.body().at("model")));
        } catch (const std::exception&) {
        }
    }
    return found;
}

} // namespace

Json HeadView::to_json() const
{
    Json m = Json::object();
    for (const auto& [name, model] : models) m[name] = model->to_json();
    Json c = Json::object();
    for (const auto& [id, state] : cases) c[id] = state->to_json();
    return {{"head", head.hex()}, {"models", std::move(m)}, {"cases", std::move(c)}};
}

HeadView advance(const HeadView& parent, const chain::Block& block)
{
    HeadView view = parent;
    view.head = block.hash;
    for (const auto& tx : block.transactions) {
        const auto type = tx.type();
        try {
            if (type == "ModelUpdate") {
                auto model = std::make_shared<const petri::WorkflowModel>(
                    petri::WorkflowModel::from_json(tx.body().at("model")));
                view.models[model->name()] = std::move(model);
            } else if (type == "InstanceState") {
                const auto it = view.models.find(str_field(tx, "model"));
                if (it == view.models.end()) throw InconsistencyError("unknown model " + str_field(tx, "model"));
                auto state = parse_state(tx, *it->second);
                const auto id = state.case_id;
                view.cases[id] = std::make_shared<const petri::CaseState>(std::move(state));
            } else {
                throw InconsistencyError("unexpected transaction type " + type);
            }
        } catch (const InconsistencyError&) {
            throw;
        } catch (const std::exception& e) {
            throw InconsistencyError("block " + block.hash.short_hex() + ": " + e.what());
        }
    }
    return view;
}

HeadView reconstruct(const chain::BlockSource& source, const chain::Block& block)
{
    std::vector<const chain::Block*> path;
    for (const chain::Block* b = &block; b != nullptr && !b->is_genesis(); b = source.get_predecessor(b->hash)) {
        path.push_back(b);
    }
    if (!path.empty() && path.back()->height != 1) throw InconsistencyError("chain does not reach genesis");
    HeadView view;
    view.head = path.empty() ? block.hash : path.back()->prev_hash;
    for (auto it = path.rbegin(); it != path.rend(); ++it) view = advance(view, **it);
    return view;
}

StatesEngine::StatesEngine(std::string node) : WorkflowEngine(std::move(node)), view_(std::make_shared<HeadView>()) {}

ViewPtr StatesEngine::view_at(const chain::Block& block)
{
    if (block.hash == view_->head) return view_;
    if (const auto it = memo_.find(block.hash); it != memo_.end()) return it->second;

    std::vector<const chain::Block*> path;
    ViewPtr base;
    const chain::Block* cursor = &block;
    while (true) {
        if (cursor->is_genesis()) {
            auto empty = std::make_shared<HeadView>();
            empty->head = cursor->hash;
            base = empty;
            break;
        }
        if (const auto it = memo_.find(cursor->hash); it != memo_.end()) {
            base = it->second;
            break;
        }
        if (cursor->hash == view_->head) {
            base = view_;
            break;
        }
        path.push_back(cursor);
        const auto* parent = source_ ? source_->get_predecessor(cursor->hash) : nullptr;
        if (parent == nullptr) {
            // First block after an unseen genesis: the empty view is its base.
            if (cursor->height == 1 && view_->head.is_zero()) {
                base = view_;
                break;
            }
            throw InconsistencyError("cannot read back from block " + cursor->hash.short_hex());
        }
        cursor = parent;
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        auto next = std::make_shared<const HeadView>(advance(*base, **it));
        memo_[(*it)->hash] = next;
        base = next;
    }
    return base;
}

std::vector<Effect> StatesEngine::effects_between(const HeadView& before, const HeadView& after) const
{
    std::vector<Effect> out;
    for (const auto& [id, state] : after.cases) {
        const auto old = before.cases.find(id);
        if (old != before.cases.end() && old->second == state) continue;
        auto more = case_effects({*state, after.models.at(state->model)});
        out.insert(out.end(), more.begin(), more.end());
    }
    for (const auto& [id, state] : before.cases) {
        if (!after.cases.contains(id)) out.push_back({Effect::Kind::CaseClosed, id, {}, "Undone"});
    }
    return out;
}

std::vector<Effect> StatesEngine::update_head(const chain::Block& block)
{
    ViewPtr next;
    if (block.prev_hash == view_->head || (view_->head.is_zero() && block.height == 1)) {
        next = std::make_shared<const HeadView>(advance(*view_, block));
        memo_[block.hash] = next;
    } else {
        next = view_at(block);
    }
    auto effects = effects_between(*view_, *next);
    view_ = next;
    return effects;
}

std::vector<Effect> StatesEngine::reset_head(const chain::Block& block)
{
    const auto next = view_at(block);
    auto effects = effects_between(*view_, *next);
    view_ = next;
    return effects;
}

void StatesEngine::forget_memos()
{
    memo_.clear();
}

void StatesEngine::apply_block(const chain::Block& block)
{
    emit(update_head(block));
}

void StatesEngine::revert_blocks(const std::vector<chain::BlockPtr>& undone, const chain::Block& fork_point)
{
    for (const auto& b : undone) {
        for (const auto& tx : b->transactions) {
            if (tx.origin() == node_name()) {
                emit({{Effect::Kind::UndoNotice, case_of(tx).value_or(""), {}, tx.id().hex()}});
            }
        }
    }
    emit(reset_head(fork_point));
}

Verdict StatesEngine::validate(const Transaction& tx, std::span<const Transaction> pending)
{
    const auto type = tx.type();
    if (type == "ModelUpdate") {
        const auto it = tx.body().find("model");
        if (it == tx.body().end() || !it->is_object()) return Verdict::invalid("MalformedModel", "model document missing");
        try {
            petri::WorkflowModel::from_json(*it);
        } catch (const std::exception& e) {
            return Verdict::invalid("MalformedModel", e.what());
        }
        return Verdict::valid();
    }
    if (type != "InstanceState") return Verdict::invalid("UnknownTransactionType", type);

    const auto case_id = str_field(tx, "case_id");
    const auto model_name = str_field(tx, "model");
    if (case_id.empty() || model_name.empty()) return Verdict::invalid("MalformedTransaction", "case_id and model required");

    petri::ModelPtr model = latest_pending_model(pending, model_name);
    if (!model) model = find_model(model_name);
    if (!model) return Verdict::invalid("UnknownModel", model_name);

    const auto current = view_->cases.find(case_id);
    if (current != view_->cases.end() && current->second->model != model_name) {
        return Verdict::invalid("ModelMismatch", "case belongs to " + current->second->model);
    }

    petri::CaseState target;
    try {
        target = parse_state(tx, *model);
    } catch (const std::exception& e) {
        return Verdict::invalid("MalformedTransaction", e.what());
    }
    for (const auto& c : model->all_constraints()) {
        try {
            if (!c.evaluate(target.values)) return Verdict::invalid("ConstraintViolation", c.source());
        } catch (const petri::ConstraintError& e) {
            return Verdict::invalid("ConstraintViolation", c.source() + ": " + e.what());
        }
    }

    const auto reach = [&](const petri::Marking& from, const char* what) -> Verdict {
        switch (petri::is_reachable(*model, from, target.marking, limits)) {
        case petri::Reachability::Reachable: return Verdict::valid();
        case petri::Reachability::Unreachable:
            return Verdict::invalid("Unreachable", petri::marking_to_string(target.marking) + " from " + what + " " +
                                                       petri::marking_to_string(from));
        case petri::Reachability::LimitExceeded: break;
        }
        return Verdict::invalid("Indeterminate", std::string("reachability limit exceeded from ") + what);
    };

    const auto& base = current != view_->cases.end() ? current->second->marking : model->initial_marking();
    if (auto v = reach(base, current != view_->cases.end() ? "current" : "initial"); !v) return v;

    for (const auto& p : pending) {
        if (p.type() != "InstanceState" || str_field(p, "case_id") != case_id) continue;
        petri::Marking pm;
        try {
            pm = petri::marking_from_json(p.body().at("marking"));
        } catch (const std::exception&) {
            continue;
        }
        if (auto v = reach(pm, "pending"); !v) return v;
    }
    return Verdict::valid();
}

std::vector<engine::CaseInfo> StatesEngine::cases() const
{
    std::vector<engine::CaseInfo> out;
    for (const auto& [id, state] : view_->cases) out.push_back({*state, view_->models.at(state->model)});
    return out;
}

std::optional<engine::CaseInfo> StatesEngine::find_case(const std::string& case_id) const
{
    const auto it = view_->cases.find(case_id);
    if (it == view_->cases.end()) return std::nullopt;
    return engine::CaseInfo{*it->second, view_->models.at(it->second->model)};
}

std::vector<petri::ModelPtr> StatesEngine::models() const
{
    std::vector<petri::ModelPtr> out;
    for (const auto& [name, m] : view_->models) out.push_back(m);
    return out;
}

petri::ModelPtr StatesEngine::find_model(const std::string& name) const
{
    const auto it = view_->models.find(name);
    return it == view_->models.end() ? nullptr : it->second;
}

Json StatesEngine::state_json() const
{
    auto j = view_->to_json();
    j.erase("head");
    j["design"] = "states";
    return j;
}

engine::Draft StatesEngine::draft_launch(const std::string& model_name, const std::string& case_id,
                                         std::span<const Transaction> pending) const
{
    auto model = latest_pending_model(pending, model_name);
    if (!model) model = find_model(model_name);
    if (!model) return {std::nullopt, Verdict::invalid("UnknownModel", model_name)};
    return {Json{{"type", "InstanceState"},
                 {"case_id", case_id},
                 {"model", model_name},
                 {"marking", petri::marking_to_json(model->initial_marking())},
                 {"values", petri::values_to_json(model->default_values())}},
            Verdict::valid()};
}

engine::Draft StatesEngine::draft_completion(const std::string& case_id, const std::string& transition,
                                             const Json& outputs, std::span<const Transaction> pending) const
{
    std::optional<petri::CaseState> state;
    petri::ModelPtr model;
    if (const auto it = view_->cases.find(case_id); it != view_->cases.end()) {
        state = *it->second;
        model = view_->models.at(state->model);
    }
    bool from_pending = false;
    for (const auto& p : pending) {
        if (p.type() != "InstanceState" || str_field(p, "case_id") != case_id) continue;
        auto m = latest_pending_model(pending, str_field(p, "model"));
        if (!m) m = find_model(str_field(p, "model"));
        if (!m) continue;
        try {
            state = parse_state(p, *m);
            model = m;
            from_pending = true;
        } catch (const std::exception&) {
        }
    }
    if (!state) return {std::nullopt, Verdict::invalid("UnknownCase", case_id)};
    const auto* act = model->find(transition);
    if (act == nullptr) return {std::nullopt, Verdict::invalid("UnknownTransition", transition)};
    if (!petri::is_enabled(*act, state->marking)) {
        return {std::nullopt, Verdict::invalid(from_pending ? "NotEnabledAfterPending" : "NotEnabled",
                                               transition + " at " + petri::marking_to_string(state->marking))};
    }
    try {
        const auto given = model->partial_values_from_json(outputs.is_null() ? Json::object() : outputs, act->outputs);
        for (const auto& [name, v] : given) state->values[name] = v;
    } catch (const petri::ValueError& e) {
        return {std::nullopt, Verdict::invalid("MalformedOutputs", e.what())};
    }
    state->marking = petri::fire(*model, state->marking, transition);
    return {Json{{"type", "InstanceState"},
                 {"case_id", case_id},
                 {"model", model->name()},
                 {"marking", petri::marking_to_json(state->marking)},
                 {"values", petri::values_to_json(state->values)}},
            Verdict::valid()};
}

Json StatesEngine::describe_pending(const Transaction& tx) const
{
    Json out = {{"id", tx.id().hex()}, {"type", tx.type()}, {"origin", tx.origin()}};
    if (tx.type() == "InstanceState") {
        out["case_id"] = str_field(tx, "case_id");
        out["marking"] = tx.body().value("marking", Json::object());
    } else if (tx.type() == "ModelUpdate") {
        out["model"] = tx.body().at("model").value("name", std::string{});
    }
    return out;
}

} // namespace wfchain::states
