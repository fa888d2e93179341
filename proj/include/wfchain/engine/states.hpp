#pragma once

#include <map>
#include <unordered_map>

#include <wfchain/engine/engine.hpp>

namespace wfchain::states {

using engine::Effect;
using engine::InconsistencyError;

/// Workflow state as read off the chain at one block: the latest model
/// version and the latest InstanceState of every case.
struct HeadView {
    Digest head;
    std::map<std::string, petri::ModelPtr> models;
    std::map<std::string, std::shared_ptr<const petri::CaseState>> cases;

    Json to_json() const;
};

using ViewPtr = std::shared_ptr<const HeadView>;

/// HeadView after the given block's transactions.
HeadView advance(const HeadView& parent, const chain::Block& block);

/// Reads the chain backwards from `block` through `source` without any memo.
HeadView reconstruct(const chain::BlockSource& source, const chain::Block& block);

/// Engine of the states-on-chain design. Keeps no durable state of its own:
/// the head view is a cache derived from the chain, memoised per block hash.
class StatesEngine : public engine::WorkflowEngine {
public:
    explicit StatesEngine(std::string node);

    engine::Design design() const override { return engine::Design::States; }

    chain::Verdict validate(const chain::Transaction& tx, std::span<const chain::Transaction> pending) override;
    void apply_block(const chain::Block& block) override;
    void revert_blocks(const std::vector<chain::BlockPtr>& undone, const chain::Block& fork_point) override;

    std::vector<Effect> update_head(const chain::Block& block);
    std::vector<Effect> reset_head(const chain::Block& block);

    const HeadView& view() const { return *view_; }
    /// Drops every memo except the current view.
    void forget_memos();
    std::size_t memo_count() const { return memo_.size(); }

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

    petri::ReachabilityLimits limits;

private:
    ViewPtr view_at(const chain::Block& block);
    std::vector<Effect> effects_between(const HeadView& before, const HeadView& after) const;

    ViewPtr view_;
    std::unordered_map<Digest, ViewPtr, DigestHash> memo_;
};

} // namespace wfchain::states
