#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <wfchain/chain/block.hpp>

namespace wfchain::chain {

/// Outcome of a workflow-semantic check.
struct Verdict {
    bool ok = true;
    std::string code;
    std::string detail;

    static Verdict valid() { return {}; }
    static Verdict invalid(std::string code, std::string detail = {})
    {
        return {false, std::move(code), std::move(detail)};
    }
    explicit operator bool() const { return ok; }
};

/// Read access to stored blocks, used by engines that walk the chain.
class BlockSource {
public:
    virtual ~BlockSource() = default;
    virtual const Block* find_block(const Digest& hash) const = 0;
    /// Stored parent of the block; nullptr for genesis, orphans and unknown blocks.
    virtual const Block* get_predecessor(const Digest& hash) const = 0;
};

/// Hooks through which the chain delegates workflow semantics to an engine.
/// All calls happen on the chain's single writer.
class StateMachine {
public:
    virtual ~StateMachine() = default;

    /// Checks tx against the state at the current head followed by `pending`
    /// (in order). Must leave the engine state unchanged.
    virtual Verdict validate(const Transaction& tx, std::span<const Transaction> pending) = 0;
    /// The block became the new head of the main branch.
    virtual void apply_block(const Block& block) = 0;
    /// The listed blocks (newest first) left the main branch; fork_point is
    /// the new head afterwards.
    virtual void revert_blocks(const std::vector<BlockPtr>& undone_newest_first, const Block& fork_point) = 0;
    /// A transaction entered the pool.
    virtual void on_pending(const Transaction&) {}
};

struct HeadAdvanced {
    BlockPtr block;
    std::vector<Transaction> dropped;
};

struct Reorganized {
    std::vector<BlockPtr> undone;  // newest first
    std::vector<BlockPtr> applied; // oldest first
    std::vector<Transaction> returned;
    std::vector<Transaction> dropped;
};

struct OrphanHeld {
    BlockPtr block;
    Digest missing;
};

struct BlockRejected {
    Digest hash;
    std::uint64_t height = 0;
    std::string reason;
};

using ChainEvent = std::variant<HeadAdvanced, Reorganized, OrphanHeld, BlockRejected>;

Json event_to_json(const ChainEvent& event);

enum class SubmitStatus { Accepted, Duplicate, Rejected };

struct SubmitResult {
    SubmitStatus status = SubmitStatus::Accepted;
    std::string code;   // BadSignature | InvalidWorkflowAction
    std::string reason; // engine reason code
    std::string detail;

    bool accepted() const { return status != SubmitStatus::Rejected; }
    Json to_json() const;
};

struct MineResult {
    std::optional<Block> block;
    std::vector<ChainEvent> events;
};

struct ChainParams {
    std::string network_id = "wfchain";
    unsigned difficulty = 8;
    std::size_t orphan_capacity = 1024;
    std::size_t max_block_transactions = 1000;
};

/// One node's view of the blockchain: block store with main and side
/// branches, orphan pool, transaction pool, mining and reorganisation.
/// The main branch is the stored branch of greatest height; on equal height
/// the incumbent is kept.
class Chain : public BlockSource {
public:
    Chain(ChainParams params, const Membership& members, StateMachine& engine);

    const ChainParams& params() const { return params_; }

    SubmitResult submit_transaction(const Transaction& tx);
    std::vector<ChainEvent> receive_block(const Block& block);
    MineResult mine_step(const std::string& miner, std::uint64_t budget);

    /// Candidate block on top of the head holding the pool in insertion order.
    Block block_template(const std::string& miner) const;

    /// Blocks on the main branch above the given one; nullopt when the block
    /// is unknown or not on the main branch.
    std::optional<std::uint64_t> confirmation_depth(const Digest& hash) const;

    const Block* find_block(const Digest& hash) const override;
    const Block* get_predecessor(const Digest& hash) const override;
    BlockPtr block_ptr(const Digest& hash) const;

    const Block& head() const { return *main_.back(); }
    const Block& genesis() const { return *main_.front(); }
    std::uint64_t height() const { return main_.size() - 1; }
    BlockPtr main_at(std::uint64_t height) const;
    bool on_main_branch(const Digest& hash) const;

    /// Height of the main-branch block holding the transaction.
    std::optional<std::uint64_t> main_height_of(const Digest& tx_id) const;
    bool in_pool(const Digest& tx_id) const { return pool_index_.contains(tx_id); }
    const std::vector<Transaction>& pool() const { return pool_; }

    /// Main-branch blocks strictly above from_hash in ascending height; the
    /// whole chain above genesis when from_hash is not on the main branch.
    std::vector<BlockPtr> chain_from(const Digest& from_hash) const;

    bool knows_block(const Digest& hash) const;
    std::vector<BlockPtr> stored_blocks() const;
    std::vector<BlockPtr> orphans() const;

    /// Called for every block that enters the store (not orphans).
    void set_store_hook(std::function<void(const Block&)> hook) { store_hook_ = std::move(hook); }

    /// Bumped whenever the head or the pool changes.
    std::uint64_t generation() const { return generation_; }

private:
    struct Stored {
        BlockPtr block;
        std::uint64_t arrival = 0;
    };

    std::optional<std::string> stateless_check(const Block& block) const;
    void store(const BlockPtr& block, std::vector<ChainEvent>& events);
    void activate_best_chain(std::vector<ChainEvent>& events);
    const Stored* best_candidate() const;
    Verdict connect(const BlockPtr& block);
    void disconnect_to(std::uint64_t fork_height, std::vector<BlockPtr>& undone);
    void index_block(const Block& block);
    void unindex_block(const Block& block);
    void discard_subtree(const Digest& root);
    std::vector<Transaction> revalidate_pool(std::vector<Transaction> candidates);
    void add_orphan(const BlockPtr& block);

    ChainParams params_;
    const Membership& members_;
    StateMachine& engine_;

    std::unordered_map<Digest, Stored, DigestHash> blocks_;
    std::unordered_map<Digest, std::vector<Digest>, DigestHash> children_;
    std::map<std::uint64_t, std::vector<Digest>> by_height_;
    std::vector<BlockPtr> main_;
    std::unordered_map<Digest, std::uint64_t, DigestHash> main_tx_index_;
    std::unordered_set<Digest, DigestHash> rejected_;

    std::deque<BlockPtr> orphan_order_;
    std::unordered_map<Digest, BlockPtr, DigestHash> orphans_;

    std::vector<Transaction> pool_;
    std::unordered_set<Digest, DigestHash> pool_index_;

    std::uint64_t arrivals_ = 0;
    std::uint64_t generation_ = 0;

    std::optional<Block> template_;
    std::uint64_t template_generation_ = 0;
    std::uint64_t next_nonce_ = 0;

    std::function<void(const Block&)> store_hook_;
};

} // namespace wfchain::chain
