#include <wfchain/engine/actions.hpp>

#include <algorithm>
#include <functional>
#include <set>

namespace wfchain::actions {

using chain::Transaction;
using chain::Verdict;
using petri::Value;

namespace {

const Json* field(const Transaction& tx, const char* name, Json::value_t type)
{
    const auto it = tx.body().find(name);
    if (it == tx.body().end() || it->type() != type) return nullptr;
    return &*it;
}

std::string str_field(const Transaction& tx, const char* name)
{
    const auto* f = field(tx, name, Json::value_t::string);
    return f ? f->get<std::string>() : std::string{};
}

std::set<std::string> keys(const Json& obj)
{
    std::set<std::string> out;
    for (const auto& [k, v] : obj.items()) out.insert(k);
    return out;
}

bool same_names(const Json& obj, const std::vector<std::string>& names)
{
    return keys(obj) == std::set<std::string>(names.begin(), names.end());
}

petri::ModelPtr parse_model(const Json& doc)
{
    return std::make_shared<const petri::WorkflowModel>(petri::WorkflowModel::from_json(doc));
}

/// Re-reverts whatever was executed, newest first, when leaving scope.
class PendingGuard {
public:
    explicit PendingGuard(std::function<void(const Transaction&)> undo) : undo_(std::move(undo)) {}
    ~PendingGuard()
    {
        for (auto it = done_.rbegin(); it != done_.rend(); ++it) undo_(**it);
    }
    PendingGuard(const PendingGuard&) = delete;
    PendingGuard& operator=(const PendingGuard&) = delete;

    void push(const Transaction* tx) { done_.push_back(tx); }

private:
    std::function<void(const Transaction&)> undo_;
    std::vector<const Transaction*> done_;
};

} // namespace

std::vector<const Transaction*> ActionsEngine::relevant(const Transaction& tx,
                                                        std::span<const Transaction> pending) const
{
    const auto case_id = case_of(tx);
    std::vector<const Transaction*> out;
    for (const auto& p : pending) {
        if (p.type() == "ModelUpdate" || (case_id && case_of(p) == case_id)) out.push_back(&p);
    }
    return out;
}

Verdict ActionsEngine::validate(const Transaction& tx, std::span<const Transaction> pending)
{
    PendingGuard guard([this](const Transaction& p) { revert(p); });
    bool same_case_applied = false;
    for (const auto* p : relevant(tx, pending)) {
        if (!check(*p, false)) continue;
        execute(*p);
        guard.push(p);
        same_case_applied = same_case_applied || p->type() != "ModelUpdate";
    }
    return check(tx, same_case_applied);
}

Verdict ActionsEngine::check(const Transaction& tx, bool after_pending) const
{
    const auto type = tx.type();
    if (type == "ModelUpdate") {
        const auto* doc = field(tx, "model", Json::value_t::object);
        if (doc == nullptr) return Verdict::invalid("MalformedModel", "model document missing");
        try {
            petri::WorkflowModel::from_json(*doc);
        } catch (const std::exception& e) {
            return Verdict::invalid("MalformedModel", e.what());
        }
        return Verdict::valid();
    }

    if (type == "InitCase") {
        const auto model = str_field(tx, "model");
        const auto case_id = str_field(tx, "case_id");
        if (model.empty() || case_id.empty()) return Verdict::invalid("MalformedTransaction", "model and case_id required");
        if (!models_.contains(model)) return Verdict::invalid("UnknownModel", model);
        if (cases_.contains(case_id)) return Verdict::invalid("DuplicateCase", case_id);
        return Verdict::valid();
    }

    if (type != "FireTransition") return Verdict::invalid("UnknownTransactionType", type);

    const auto case_id = str_field(tx, "case_id");
    const auto transition = str_field(tx, "transition");
    const auto* inputs = field(tx, "inputs", Json::value_t::object);
    const auto* pre = field(tx, "pre_values", Json::value_t::object);
    const auto* post = field(tx, "post_values", Json::value_t::object);
    if (case_id.empty() || transition.empty() || !inputs || !pre || !post) {
        return Verdict::invalid("MalformedTransaction", "case_id, transition, inputs, pre_values and post_values required");
    }
    const auto it = cases_.find(case_id);
    if (it == cases_.end()) return Verdict::invalid("UnknownCase", case_id);
    const auto& rec = it->second;
    const auto* act = rec.model->find(transition);
    if (act == nullptr) return Verdict::invalid("UnknownTransition", transition);
    if (act->actor != tx.origin()) {
        return Verdict::invalid("NotAssignedActor", transition + " is assigned to " + act->actor);
    }
    if (!petri::is_enabled(*act, rec.state.marking)) {
        return Verdict::invalid(after_pending ? "NotEnabledAfterPending" : "NotEnabled",
                                transition + " at " + petri::marking_to_string(rec.state.marking));
    }
    if (!same_names(*pre, act->outputs) || !same_names(*post, act->outputs)) {
        return Verdict::invalid("MalformedTransaction", "pre_values and post_values must list exactly the outputs");
    }
    if (!same_names(*inputs, act->inputs)) {
        return Verdict::invalid("MalformedTransaction", "inputs must list exactly the activity inputs");
    }

    petri::Values values = rec.state.values;
    try {
        for (const auto& name : act->inputs) {
            if (petri::value_from_json(*rec.model->variable_type(name), inputs->at(name)) != values.at(name)) {
                return Verdict::invalid("InputValueMismatch", name);
            }
        }
        for (const auto& name : act->outputs) {
            if (petri::value_from_json(*rec.model->variable_type(name), pre->at(name)) != values.at(name)) {
                return Verdict::invalid("PreValueMismatch", name);
            }
        }
        for (const auto& name : act->outputs) {
            values[name] = petri::value_from_json(*rec.model->variable_type(name), post->at(name));
        }
    } catch (const petri::ValueError& e) {
        return Verdict::invalid("MalformedTransaction", e.what());
    }
    for (const auto& c : act->constraints) {
        try {
            if (!c.evaluate(values)) return Verdict::invalid("ConstraintViolation", c.source());
        } catch (const petri::ConstraintError& e) {
            return Verdict::invalid("ConstraintViolation", c.source() + ": " + e.what());
        }
    }
    return Verdict::valid();
}

void ActionsEngine::execute(const Transaction& tx)
{
    const auto type = tx.type();
    if (type == "ModelUpdate") {
        auto model = parse_model(tx.body().at("model"));
        models_[model->name()].push_back(std::move(model));
    } else if (type == "InitCase") {
        const auto& versions = models_.at(str_field(tx, "model"));
        CaseRecord rec;
        rec.model = versions.back();
        rec.model_version = versions.size() - 1;
        rec.state = {str_field(tx, "case_id"), rec.model->name(), rec.model->initial_marking(),
                     rec.model->default_values()};
        cases_.emplace(rec.state.case_id, std::move(rec));
    } else if (type == "FireTransition") {
        auto& rec = cases_.at(str_field(tx, "case_id"));
        const auto transition = str_field(tx, "transition");
        const auto& act = rec.model->at(transition);
        rec.state.marking = petri::fire(*rec.model, rec.state.marking, transition);
        const auto& post = tx.body().at("post_values");
        for (const auto& name : act.outputs) {
            rec.state.values[name] = petri::value_from_json(*rec.model->variable_type(name), post.at(name));
        }
    } else {
        throw InconsistencyError("cannot execute transaction of type " + type);
    }
}

void ActionsEngine::revert(const Transaction& tx)
{
    const auto type = tx.type();
    if (type == "ModelUpdate") {
        const auto name = tx.body().at("model").value("name", std::string{});
        const auto it = models_.find(name);
        if (it == models_.end()) throw InconsistencyError("undo of unknown model " + name);
        it->second.pop_back();
        if (it->second.empty()) models_.erase(it);
    } else if (type == "InitCase") {
        const auto it = cases_.find(str_field(tx, "case_id"));
        if (it == cases_.end() || it->second.state.marking != it->second.model->initial_marking()) {
            throw InconsistencyError("undo of InitCase for a case that moved on: " + str_field(tx, "case_id"));
        }
        cases_.erase(it);
    } else if (type == "FireTransition") {
        const auto it = cases_.find(str_field(tx, "case_id"));
        if (it == cases_.end()) throw InconsistencyError("undo of FireTransition on unknown case");
        auto& rec = it->second;
        const auto transition = str_field(tx, "transition");
        try {
            rec.state.marking = petri::unfire(*rec.model, rec.state.marking, transition);
        } catch (const petri::SemanticsError& e) {
            throw InconsistencyError(e.what());
        }
        const auto& pre = tx.body().at("pre_values");
        for (const auto& name : rec.model->at(transition).outputs) {
            rec.state.values[name] = petri::value_from_json(*rec.model->variable_type(name), pre.at(name));
        }
    } else {
        throw InconsistencyError("cannot undo transaction of type " + type);
    }
}

std::vector<Effect> ActionsEngine::do_block(const chain::Block& block)
{
    std::vector<std::string> touched;
    for (const auto& tx : block.transactions) {
        const auto verdict = check(tx, false);
        if (!verdict) {
            throw InconsistencyError("block " + block.hash.short_hex() + " tx " + tx.id().short_hex() + ": " +
                                     verdict.code + " " + verdict.detail);
        }
        execute(tx);
        if (auto c = case_of(tx); c && std::find(touched.begin(), touched.end(), *c) == touched.end()) {
            touched.push_back(*c);
        }
    }
    std::vector<Effect> out;
    for (const auto& id : touched) {
        auto more = case_effects(*find_case(id));
        out.insert(out.end(), more.begin(), more.end());
    }
    return out;
}

std::vector<Effect> ActionsEngine::undo_block(const chain::Block& block)
{
    std::vector<Effect> out;
    std::vector<std::string> touched;
    const auto& txs = block.transactions;
    for (auto it = txs.rbegin(); it != txs.rend(); ++it) {
        revert(*it);
        const auto c = case_of(*it);
        if (it->origin() == node_name()) {
            out.push_back({Effect::Kind::UndoNotice, c.value_or(""), str_field(*it, "transition"), it->id().hex()});
        }
        if (c && std::find(touched.begin(), touched.end(), *c) == touched.end()) touched.push_back(*c);
    }
    for (const auto& id : touched) {
        if (const auto info = find_case(id)) {
            out.push_back({Effect::Kind::CaseReopened, id, {}, {}});
            auto more = case_effects(*info);
            out.insert(out.end(), more.begin(), more.end());
        } else {
            out.push_back({Effect::Kind::CaseClosed, id, {}, "Undone"});
        }
    }
    return out;
}

void ActionsEngine::apply_block(const chain::Block& block)
{
    emit(do_block(block));
}

void ActionsEngine::revert_blocks(const std::vector<chain::BlockPtr>& undone, const chain::Block&)
{
    for (const auto& b : undone) emit(undo_block(*b));
}

std::vector<engine::CaseInfo> ActionsEngine::cases() const
{
    std::vector<engine::CaseInfo> out;
    for (const auto& [id, rec] : cases_) out.push_back({rec.state, rec.model});
    return out;
}

std::optional<engine::CaseInfo> ActionsEngine::find_case(const std::string& case_id) const
{
    const auto it = cases_.find(case_id);
    if (it == cases_.end()) return std::nullopt;
    return engine::CaseInfo{it->second.state, it->second.model};
}

std::vector<petri::ModelPtr> ActionsEngine::models() const
{
    std::vector<petri::ModelPtr> out;
    for (const auto& [name, versions] : models_) out.push_back(versions.back());
    return out;
}

petri::ModelPtr ActionsEngine::find_model(const std::string& name) const
{
    const auto it = models_.find(name);
    return it == models_.end() ? nullptr : it->second.back();
}

Json ActionsEngine::state_json() const
{
    Json models = Json::object();
    for (const auto& [name, versions] : models_) {
        Json list = Json::array();
        for (const auto& m : versions) list.push_back(m->to_json());
        models[name] = std::move(list);
    }
    Json cases = Json::object();
    for (const auto& [id, rec] : cases_) {
        cases[id] = {{"model", rec.state.model},
                     {"model_version", rec.model_version},
                     {"marking", petri::marking_to_json(rec.state.marking)},
                     {"values", petri::values_to_json(rec.state.values)}};
    }
    return {{"design", "actions"}, {"models", std::move(models)}, {"cases", std::move(cases)}};
}

engine::Draft ActionsEngine::draft_launch(const std::string& model, const std::string& case_id,
                                          std::span<const Transaction>) const
{
    return {Json{{"type", "InitCase"}, {"model", model}, {"case_id", case_id}}, Verdict::valid()};
}

engine::Draft ActionsEngine::draft_completion(const std::string& case_id, const std::string& transition,
                                              const Json& outputs, std::span<const Transaction> pending) const
{
    // Values at head followed by the case's pending firings.
    std::optional<CaseRecord> rec;
    if (const auto it = cases_.find(case_id); it != cases_.end()) rec = it->second;
    for (const auto& p : pending) {
        if (case_of(p) != case_id) continue;
        if (!rec && p.type() == "InitCase") {
            const auto m = find_model(str_field(p, "model"));
            if (m) rec = CaseRecord{{case_id, m->name(), m->initial_marking(), m->default_values()}, m, 0};
        } else if (rec && p.type() == "FireTransition") {
            const auto* act = rec->model->find(str_field(p, "transition"));
            const auto* post = field(p, "post_values", Json::value_t::object);
            if (!act || !post || !petri::is_enabled(*act, rec->state.marking)) continue;
            try {
                rec->state.marking = petri::fire(*rec->model, rec->state.marking, act->name);
                for (const auto& name : act->outputs) {
                    rec->state.values[name] = petri::value_from_json(*rec->model->variable_type(name), post->at(name));
                }
            } catch (const std::exception&) {
            }
        }
    }
    if (!rec) return {std::nullopt, Verdict::invalid("UnknownCase", case_id)};
    const auto* act = rec->model->find(transition);
    if (act == nullptr) return {std::nullopt, Verdict::invalid("UnknownTransition", transition)};

    petri::Values given;
    try {
        given = rec->model->partial_values_from_json(outputs.is_null() ? Json::object() : outputs, act->outputs);
    } catch (const petri::ValueError& e) {
        return {std::nullopt, Verdict::invalid("MalformedOutputs", e.what())};
    }
    Json inputs = Json::object();
    Json pre = Json::object();
    Json post = Json::object();
    for (const auto& name : act->inputs) inputs[name] = petri::value_to_json(rec->state.values.at(name));
    for (const auto& name : act->outputs) {
        const auto& current = rec->state.values.at(name);
        pre[name] = petri::value_to_json(current);
        const auto g = given.find(name);
        post[name] = petri::value_to_json(g == given.end() ? current : g->second);
    }
    return {Json{{"type", "FireTransition"},
                 {"case_id", case_id},
                 {"transition", transition},
                 {"inputs", std::move(inputs)},
                 {"pre_values", std::move(pre)},
                 {"post_values", std::move(post)}},
            Verdict::valid()};
}

Json ActionsEngine::describe_pending(const Transaction& tx) const
{
    Json out = {{"id", tx.id().hex()}, {"type", tx.type()}, {"origin", tx.origin()}};
    if (const auto c = case_of(tx)) out["case_id"] = *c;
    if (tx.type() == "FireTransition") {
        out["transition"] = str_field(tx, "transition");
        out["post_values"] = tx.body().value("post_values", Json::object());
    } else if (tx.type() == "InitCase") {
        out["model"] = str_field(tx, "model");
    } else if (tx.type() == "ModelUpdate") {
        out["model"] = tx.body().at("model").value("name", std::string{});
    }
    return out;
}

} // namespace wfchain::actions
