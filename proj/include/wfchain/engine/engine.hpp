#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <wfchain/chain/chain.hpp>
#include <wfchain/petrinet/semantics.hpp>

namespace wfchain::engine {

/// A block that passed validation could not be applied or undone.
class InconsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class Design { Actions, States };

std::string_view to_string(Design d);
/// Accepts "actions" / "states"; throws std::invalid_argument otherwise.
Design design_from_string(std::string_view name);

struct CaseInfo {
    petri::CaseState state;
    petri::ModelPtr model;
};

/// Side effect of executing or undoing a block, reported for the local node.
struct Effect {
    enum class Kind { WorkItemEnabled, HandlerInvocation, CaseClosed, CaseReopened, UndoNotice };
    Kind kind;
    std::string case_id;
    std::string transition;
    std::string detail;

    Json to_json() const;
};

/// Completion of a work item turned into a transaction body, or the reason
/// it could not be drafted.
struct Draft {
    std::optional<Json> body;
    chain::Verdict error;
};

/// Workflow engine as seen by the chain (StateMachine) and by the node.
class WorkflowEngine : public chain::StateMachine {
public:
    virtual Design design() const = 0;
    const std::string& node_name() const { return node_; }

    virtual std::vector<CaseInfo> cases() const = 0;
    virtual std::optional<CaseInfo> find_case(const std::string& case_id) const = 0;
    /// Latest version of every known model.
    virtual std::vector<petri::ModelPtr> models() const = 0;
    virtual petri::ModelPtr find_model(const std::string& name) const = 0;

    /// Full engine state in canonical form; two engines that executed the
    /// same chain produce identical bytes.
    virtual Json state_json() const = 0;
    Digest state_digest() const { return digest(canonical_bytes(state_json())); }
    /// Case id -> {model, marking, values}; comparable across designs.
    Json case_states_json() const;

    Json draft_model_update(const Json& model_doc) const;
    virtual Draft draft_launch(const std::string& model, const std::string& case_id,
                               std::span<const chain::Transaction> pending) const = 0;
    /// Body for completing `transition` of the case with the given output
    /// values, computed against the state at head followed by `pending`.
    virtual Draft draft_completion(const std::string& case_id, const std::string& transition, const Json& outputs,
                                   std::span<const chain::Transaction> pending) const = 0;

    /// Display form of a pending transaction.
    virtual Json describe_pending(const chain::Transaction& tx) const = 0;
    /// Case the transaction belongs to, if any.
    static std::optional<std::string> case_of(const chain::Transaction& tx);

    /// Effects produced since the last call.
    std::vector<Effect> drain_effects();

    /// Blocks are walked backwards through this source when needed.
    void set_block_source(const chain::BlockSource* source) { source_ = source; }

protected:
    explicit WorkflowEngine(std::string node) : node_(std::move(node)) {}

    void emit(std::vector<Effect> effects);
    /// Local work enabled in a case, or its closure.
    std::vector<Effect> case_effects(const CaseInfo& c) const;

    const chain::BlockSource* source_ = nullptr;

private:
    std::string node_;
    std::vector<Effect> effects_;
};

std::unique_ptr<WorkflowEngine> make_engine(Design design, const std::string& node);

struct ReplayResult {
    std::unique_ptr<WorkflowEngine> engine;
    /// First transaction that failed validation against its prefix.
    std::optional<std::string> failure;
};

/// Executes the given main-branch blocks (ascending, genesis excluded) on a
/// fresh engine, validating every transaction against its chain prefix.
ReplayResult replay(Design design, const std::string& node, const std::vector<chain::BlockPtr>& blocks);

} // namespace wfchain::engine
