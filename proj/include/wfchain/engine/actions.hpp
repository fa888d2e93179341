#pragma once

#include <map>

#include <wfchain/engine/engine.hpp>

namespace wfchain::actions {

using engine::Effect;
using engine::InconsistencyError;

/// Case record of the actions engine: the case is bound to the model
/// version that was current when it was created.
struct CaseRecord {
    petri::CaseState state;
    petri::ModelPtr model;
    std::size_t model_version = 0;
};

/// Engine of the actions-on-chain design: ModelUpdate, InitCase and
/// FireTransition transactions are executed against local state and undone
/// in reverse order during reorganisations.
class ActionsEngine : public engine::WorkflowEngine {
public:
    explicit ActionsEngine(std::string node) : WorkflowEngine(std::move(node)) {}

    engine::Design design() const override { return engine::Design::Actions; }

    chain::Verdict validate(const chain::Transaction& tx, std::span<const chain::Transaction> pending) override;
    void apply_block(const chain::Block& block) override;
    void revert_blocks(const std::vector<chain::BlockPtr>& undone, const chain::Block& fork_point) override;

    std::vector<Effect> do_block(const chain::Block& block);
    std::vector<Effect> undo_block(const chain::Block& block);

    std::vector<engine::CaseInfo> cases() const override;
    std::optional<engine::CaseInfo> find_case(const std::string& case_id) const override;
    std::vector<petri::ModelPtr> models() const override;
    petri::ModelPtr find_model(const std::string& name) const override;
    Json state_json() const override;

    engine::Draft draft_launch(const std::string& model, const std::string& case_id,
                               std::span<const chain::Transaction> pending) const override;
    engine::Draft draft_completion(const std::string& case_id, const std::string& transition, const Json& outputs,
                                   std::span<const chain::Transaction> pending) const override;
    Json describe_pending(const chain::Transaction& tx) const override;

private:
    /// Checks tx against the current state without modifying it.
    chain::Verdict check(const chain::Transaction& tx, bool after_pending) const;
    /// Executes a transaction that passed check(); throws InconsistencyError otherwise.
    void execute(const chain::Transaction& tx);
    void revert(const chain::Transaction& tx);

    /// Pending transactions relevant to tx: model updates and those of the same case.
    std::vector<const chain::Transaction*> relevant(const chain::Transaction& tx,
                                                    std::span<const chain::Transaction> pending) const;

    std::map<std::string, std::vector<petri::ModelPtr>> models_;
    std::map<std::string, CaseRecord> cases_;
};

} // namespace wfchain::actions
