#include <wfchain/engine/engine.hpp>

#include <wfchain/engine/actions.hpp>
#include <wfchain/engine/states.hpp>

namespace wfchain::engine {

std::string_view to_string(Design d)
{
    return d == Design::Actions ? "actions" : "states";
}

Design design_from_string(std::string_view name)
{
    if (name == "actions") return Design::Actions;
    if (name == "states") return Design::States;
    throw std::invalid_argument("unknown engine design '" + std::string(name) + "' (expected actions or states)");
}

Json Effect::to_json() const
{
    static constexpr const char* names[] = {"WorkItemEnabled", "HandlerInvocation", "CaseClosed", "CaseReopened",
                                            "UndoNotice"};
    Json out = {{"kind", names[static_cast<int>(kind)]}, {"case_id", case_id}};
    if (!transition.empty()) out["transition"] = transition;
    if (!detail.empty()) out["detail"] = detail;
    return out;
}

Json WorkflowEngine::case_states_json() const
{
    Json out = Json::object();
    for (const auto& c : cases()) {
        out[c.state.case_id] = {{"model", c.state.model},
                                {"marking", petri::marking_to_json(c.state.marking)},
                                {"values", petri::values_to_json(c.state.values)}};
    }
    return out;
}

Json WorkflowEngine::draft_model_update(const Json& model_doc) const
{
    petri::WorkflowModel::from_json(model_doc);
    return {{"type", "ModelUpdate"}, {"model", model_doc}};
}

std::optional<std::string> WorkflowEngine::case_of(const chain::Transaction& tx)
{
    const auto it = tx.body().find("case_id");
    if (it == tx.body().end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

std::vector<Effect> WorkflowEngine::drain_effects()
{
    return std::exchange(effects_, {});
}

void WorkflowEngine::emit(std::vector<Effect> effects)
{
    effects_.insert(effects_.end(), std::make_move_iterator(effects.begin()), std::make_move_iterator(effects.end()));
}

std::vector<Effect> WorkflowEngine::case_effects(const CaseInfo& c) const
{
    std::vector<Effect> out;
    const auto status = petri::case_status(*c.model, c.state.marking);
    if (status != petri::CaseStatus::Running) {
        out.push_back({Effect::Kind::CaseClosed, c.state.case_id, {}, std::string(petri::to_string(status))});
        return out;
    }
    for (const auto& t : petri::enabled_transitions(*c.model, c.state.marking)) {
        const auto& act = c.model->at(t);
        if (act.actor != node_) continue;
        out.push_back({Effect::Kind::WorkItemEnabled, c.state.case_id, t, {}});
        if (act.handler) out.push_back({Effect::Kind::HandlerInvocation, c.state.case_id, t, *act.handler});
    }
    return out;
}

std::unique_ptr<WorkflowEngine> make_engine(Design design, const std::string& node)
{
    if (design == Design::Actions) return std::make_unique<actions::ActionsEngine>(node);
    return std::make_unique<states::StatesEngine>(node);
}

ReplayResult replay(Design design, const std::string& node, const std::vector<chain::BlockPtr>& blocks)
{
    ReplayResult result{make_engine(design, node), std::nullopt};
    for (const auto& block : blocks) {
        const auto& txs = block->transactions;
        for (std::size_t i = 0; i < txs.size() && !result.failure; ++i) {
            const auto verdict = result.engine->validate(txs[i], std::span(txs.data(), i));
            if (!verdict) {
                result.failure = "block " + block->hash.short_hex() + " height " + std::to_string(block->height) +
                                 " tx " + txs[i].id().short_hex() + ": " + verdict.code + " " + verdict.detail;
            }
        }
        if (result.failure) break;
        result.engine->apply_block(*block);
    }
    result.engine->drain_effects();
    return result;
}

} // namespace wfchain::engine
