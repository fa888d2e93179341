#include <wfchain/chain/chain.hpp>

#include <algorithm>
#include <stdexcept>

namespace wfchain::chain {

namespace {

Json tx_ids(const std::vector<Transaction>& txs)
{
    Json out = Json::array();
    for (const auto& tx : txs) out.push_back(tx.id().hex());
    return out;
}

Json block_hashes(const std::vector<BlockPtr>& blocks)
{
    Json out = Json::array();
    for (const auto& b : blocks) out.push_back(b->hash.hex());
    return out;
}

std::string_view to_string(SubmitStatus s)
{
    switch (s) {
    case SubmitStatus::Accepted: return "Accepted";
    case SubmitStatus::Duplicate: return "Duplicate";
    case SubmitStatus::Rejected: return "Rejected";
    }
    return "?";
}

} // namespace

Json event_to_json(const ChainEvent& event)
{
    return std::visit(
        [](const auto& e) -> Json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, HeadAdvanced>) {
                return {{"type", "HeadAdvanced"},
                        {"block", e.block->hash.hex()},
                        {"height", e.block->height},
                        {"dropped", tx_ids(e.dropped)}};
            } else if constexpr (std::is_same_v<T, Reorganized>) {
                return {{"type", "Reorganized"},
                        {"undone", block_hashes(e.undone)},
                        {"applied", block_hashes(e.applied)},
                        {"returned", tx_ids(e.returned)},
                        {"dropped", tx_ids(e.dropped)}};
            } else if constexpr (std::is_same_v<T, OrphanHeld>) {
                return {{"type", "OrphanHeld"}, {"block", e.block->hash.hex()}, {"missing", e.missing.hex()}};
            } else {
                return {{"type", "BlockRejected"}, {"block", e.hash.hex()}, {"height", e.height}, {"reason", e.reason}};
            }
        },
        event);
}

Json SubmitResult::to_json() const
{
    Json out = {{"status", to_string(status)}};
    if (!code.empty()) out["code"] = code;
    if (!reason.empty()) out["reason"] = reason;
    if (!detail.empty()) out["detail"] = detail;
    return out;
}

Chain::Chain(ChainParams params, const Membership& members, StateMachine& engine)
    : params_(std::move(params)), members_(members), engine_(engine)
{
    auto genesis = std::make_shared<const Block>(Block::genesis(params_.network_id));
    blocks_[genesis->hash] = {genesis, arrivals_++};
    by_height_[0].push_back(genesis->hash);
    main_.push_back(genesis);
}

SubmitResult Chain::submit_transaction(const Transaction& tx)
{
    if (pool_index_.contains(tx.id()) || main_tx_index_.contains(tx.id())) {
        return {SubmitStatus::Duplicate, {}, {}, {}};
    }
    if (!members_.contains(tx.origin())) {
        return {SubmitStatus::Rejected, "BadSignature", "UnknownSigner", "origin '" + tx.origin() + "' is not a member"};
    }
    if (!tx.verify(members_)) {
        return {SubmitStatus::Rejected, "BadSignature", "BadSignature", "signature does not verify"};
    }
    const auto verdict = engine_.validate(tx, pool_);
    if (!verdict) {
        return {SubmitStatus::Rejected, "InvalidWorkflowAction", verdict.code, verdict.detail};
    }
    pool_.push_back(tx);
    pool_index_.insert(tx.id());
    ++generation_;
    engine_.on_pending(tx);
    return {SubmitStatus::Accepted, {}, {}, {}};
}

std::optional<std::string> Chain::stateless_check(const Block& block) const
{
    if (block.compute_hash() != block.hash) return "BadHash";
    if (block.prev_hash.is_zero() || block.height == 0) return "UnexpectedGenesis";
    if (block.hash.leading_zero_bits() < params_.difficulty) return "InsufficientWork";
    if (block.transactions.size() > params_.max_block_transactions) return "TooManyTransactions";
    for (const auto& tx : block.transactions) {
        if (!tx.verify(members_)) return "BadTransactionSignature";
    }
    return std::nullopt;
}

std::vector<ChainEvent> Chain::receive_block(const Block& block)
{
    std::vector<ChainEvent> events;
    if (knows_block(block.hash)) return events;

    if (auto err = stateless_check(block)) {
        rejected_.insert(block.hash);
        events.push_back(BlockRejected{block.hash, block.height, *err});
        return events;
    }
    if (rejected_.contains(block.prev_hash)) {
        rejected_.insert(block.hash);
        events.push_back(BlockRejected{block.hash, block.height, "InvalidAncestor"});
        return events;
    }
    const auto parent = blocks_.find(block.prev_hash);
    if (parent == blocks_.end()) {
        auto ptr = std::make_shared<const Block>(block);
        add_orphan(ptr);
        events.push_back(OrphanHeld{ptr, block.prev_hash});
        return events;
    }
    if (block.height != parent->second.block->height + 1) {
        rejected_.insert(block.hash);
        events.push_back(BlockRejected{block.hash, block.height, "BadHeight"});
        return events;
    }
    store(std::make_shared<const Block>(block), events);
    return events;
}

void Chain::add_orphan(const BlockPtr& block)
{
    orphans_[block->hash] = block;
    orphan_order_.push_back(block);
    while (orphan_order_.size() > params_.orphan_capacity) {
        orphans_.erase(orphan_order_.front()->hash);
        orphan_order_.pop_front();
    }
}

void Chain::store(const BlockPtr& first, std::vector<ChainEvent>& events)
{
    std::deque<BlockPtr> queue{first};
    while (!queue.empty()) {
        const BlockPtr block = queue.front();
        queue.pop_front();

        blocks_[block->hash] = {block, arrivals_++};
        children_[block->prev_hash].push_back(block->hash);
        by_height_[block->height].push_back(block->hash);
        if (store_hook_) store_hook_(*block);

        activate_best_chain(events);

        const bool parent_valid = blocks_.contains(block->hash);
        std::vector<BlockPtr> waiting;
        for (const auto& orphan : orphan_order_) {
            if (orphan->prev_hash == block->hash) waiting.push_back(orphan);
        }
        for (const auto& orphan : waiting) {
            orphans_.erase(orphan->hash);
            orphan_order_.erase(std::find(orphan_order_.begin(), orphan_order_.end(), orphan));
            if (!parent_valid) {
                rejected_.insert(orphan->hash);
                events.push_back(BlockRejected{orphan->hash, orphan->height, "InvalidAncestor"});
            } else if (orphan->height != block->height + 1) {
                rejected_.insert(orphan->hash);
                events.push_back(BlockRejected{orphan->hash, orphan->height, "BadHeight"});
            } else {
                queue.push_back(orphan);
            }
        }
    }
}

const Chain::Stored* Chain::best_candidate() const
{
    if (by_height_.empty()) return nullptr;
    const auto& [top, hashes] = *by_height_.rbegin();
    if (top <= height() || hashes.empty()) return nullptr;
    const Stored* best = nullptr;
    for (const auto& h : hashes) {
        const auto& s = blocks_.at(h);
        if (best == nullptr || s.arrival < best->arrival) best = &s;
    }
    return best;
}

void Chain::activate_best_chain(std::vector<ChainEvent>& events)
{
    while (const Stored* candidate = best_candidate()) {
        std::vector<BlockPtr> path;
        BlockPtr cursor = candidate->block;
        while (!on_main_branch(cursor->hash)) {
            path.push_back(cursor);
            cursor = blocks_.at(cursor->prev_hash).block;
        }
        std::reverse(path.begin(), path.end());
        const std::uint64_t fork_height = cursor->height;

        std::vector<BlockPtr> undone;
        disconnect_to(fork_height, undone);

        BlockPtr failed;
        Verdict failure;
        for (const auto& b : path) {
            failure = connect(b);
            if (!failure) {
                failed = b;
                break;
            }
        }

        if (failed) {
            std::vector<BlockPtr> scratch;
            disconnect_to(fork_height, scratch);
            for (auto it = undone.rbegin(); it != undone.rend(); ++it) {
                if (!connect(*it)) throw std::logic_error("previously valid block failed to reconnect");
            }
            events.push_back(BlockRejected{failed->hash, failed->height,
                                           failure.code + (failure.detail.empty() ? "" : ": " + failure.detail)});
            discard_subtree(failed->hash);
            continue;
        }

        ++generation_;
        if (undone.empty()) {
            auto dropped = revalidate_pool(pool_);
            for (std::size_t i = 0; i < path.size(); ++i) {
                HeadAdvanced ev{path[i], {}};
                if (i + 1 == path.size()) ev.dropped = std::move(dropped);
                events.push_back(std::move(ev));
            }
        } else {
            Reorganized ev;
            for (auto it = undone.rbegin(); it != undone.rend(); ++it) {
                for (const auto& tx : (*it)->transactions) {
                    if (!main_tx_index_.contains(tx.id())) ev.returned.push_back(tx);
                }
            }
            std::vector<Transaction> candidates = ev.returned;
            candidates.insert(candidates.end(), pool_.begin(), pool_.end());
            ev.dropped = revalidate_pool(std::move(candidates));
            ev.undone = std::move(undone);
            ev.applied = std::move(path);
            events.push_back(std::move(ev));
        }
    }
}

Verdict Chain::connect(const BlockPtr& block)
{
    std::unordered_set<Digest, DigestHash> seen;
    const auto& txs = block->transactions;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const auto& tx = txs[i];
        if (main_tx_index_.contains(tx.id()) || !seen.insert(tx.id()).second) {
            return Verdict::invalid("DuplicateTransaction", tx.id().short_hex());
        }
        const auto verdict = engine_.validate(tx, std::span<const Transaction>(txs.data(), i));
        if (!verdict) {
            return Verdict::invalid(verdict.code, "transaction " + tx.id().short_hex() + ": " + verdict.detail);
        }
    }
    engine_.apply_block(*block);
    main_.push_back(block);
    index_block(*block);
    return Verdict::valid();
}

void Chain::disconnect_to(std::uint64_t fork_height, std::vector<BlockPtr>& undone)
{
    while (height() > fork_height) {
        undone.push_back(main_.back());
        unindex_block(*main_.back());
        main_.pop_back();
    }
    if (!undone.empty()) engine_.revert_blocks(undone, *main_.back());
}

void Chain::index_block(const Block& block)
{
    for (const auto& tx : block.transactions) main_tx_index_[tx.id()] = block.height;
}

void Chain::unindex_block(const Block& block)
{
    for (const auto& tx : block.transactions) main_tx_index_.erase(tx.id());
}

void Chain::discard_subtree(const Digest& root)
{
    std::vector<Digest> stack{root};
    while (!stack.empty()) {
        const Digest h = stack.back();
        stack.pop_back();
        rejected_.insert(h);
        const auto it = blocks_.find(h);
        if (it == blocks_.end()) continue;
        const auto block = it->second.block;
        auto& level = by_height_[block->height];
        level.erase(std::remove(level.begin(), level.end(), h), level.end());
        if (level.empty()) by_height_.erase(block->height);
        auto& siblings = children_[block->prev_hash];
        siblings.erase(std::remove(siblings.begin(), siblings.end(), h), siblings.end());
        if (const auto kids = children_.find(h); kids != children_.end()) {
            stack.insert(stack.end(), kids->second.begin(), kids->second.end());
            children_.erase(kids);
        }
        blocks_.erase(it);
    }
    // Orphans hanging off the discarded subtree can never connect.
    bool removed = true;
    while (removed) {
        removed = false;
        for (auto it = orphan_order_.begin(); it != orphan_order_.end(); ++it) {
            if (rejected_.contains((*it)->prev_hash)) {
                rejected_.insert((*it)->hash);
                orphans_.erase((*it)->hash);
                orphan_order_.erase(it);
                removed = true;
                break;
            }
        }
    }
}

std::vector<Transaction> Chain::revalidate_pool(std::vector<Transaction> candidates)
{
    pool_.clear();
    pool_index_.clear();
    std::vector<Transaction> dropped;
    for (auto& tx : candidates) {
        if (main_tx_index_.contains(tx.id()) || pool_index_.contains(tx.id())) continue;
        if (engine_.validate(tx, pool_)) {
            pool_index_.insert(tx.id());
            pool_.push_back(std::move(tx));
        } else {
            dropped.push_back(std::move(tx));
        }
    }
    ++generation_;
    return dropped;
}

Block Chain::block_template(const std::string& miner) const
{
    Block b;
    b.prev_hash = head().hash;
    b.height = height() + 1;
    b.miner = miner;
    const auto n = std::min(pool_.size(), params_.max_block_transactions);
    b.transactions.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(n));
    return b;
}

MineResult Chain::mine_step(const std::string& miner, std::uint64_t budget)
{
    if (!template_ || template_generation_ != generation_ || template_->miner != miner) {
        template_ = block_template(miner);
        template_generation_ = generation_;
        next_nonce_ = 0;
    }
    MineResult result;
    if (grind(*template_, next_nonce_, budget, params_.difficulty)) {
        Block found = std::move(*template_);
        template_.reset();
        result.events = receive_block(found);
        result.block = std::move(found);
    } else {
        next_nonce_ += budget;
    }
    return result;
}

std::optional<std::uint64_t> Chain::confirmation_depth(const Digest& hash) const
{
    const auto* b = find_block(hash);
    if (b == nullptr || b->height > height() || main_[b->height]->hash != hash) return std::nullopt;
    return height() - b->height;
}

const Block* Chain::find_block(const Digest& hash) const
{
    const auto it = blocks_.find(hash);
    return it == blocks_.end() ? nullptr : it->second.block.get();
}

BlockPtr Chain::block_ptr(const Digest& hash) const
{
    const auto it = blocks_.find(hash);
    return it == blocks_.end() ? nullptr : it->second.block;
}

const Block* Chain::get_predecessor(const Digest& hash) const
{
    const auto* b = find_block(hash);
    if (b == nullptr || b->is_genesis()) return nullptr;
    return find_block(b->prev_hash);
}

BlockPtr Chain::main_at(std::uint64_t h) const
{
    return h < main_.size() ? main_[h] : nullptr;
}

bool Chain::on_main_branch(const Digest& hash) const
{
    const auto* b = find_block(hash);
    return b != nullptr && b->height < main_.size() && main_[b->height]->hash == hash;
}

std::optional<std::uint64_t> Chain::main_height_of(const Digest& tx_id) const
{
    const auto it = main_tx_index_.find(tx_id);
    if (it == main_tx_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<BlockPtr> Chain::chain_from(const Digest& from_hash) const
{
    std::uint64_t start = 1;
    if (on_main_branch(from_hash)) start = find_block(from_hash)->height + 1;
    return {main_.begin() + static_cast<std::ptrdiff_t>(std::min<std::uint64_t>(start, main_.size())), main_.end()};
}

bool Chain::knows_block(const Digest& hash) const
{
    return blocks_.contains(hash) || orphans_.contains(hash) || rejected_.contains(hash);
}

std::vector<BlockPtr> Chain::stored_blocks() const
{
    std::vector<std::pair<std::uint64_t, BlockPtr>> ordered;
    for (const auto& [h, s] : blocks_) ordered.emplace_back(s.arrival, s.block);
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<BlockPtr> out;
    for (auto& [_, b] : ordered) out.push_back(std::move(b));
    return out;
}

std::vector<BlockPtr> Chain::orphans() const
{
    return {orphan_order_.begin(), orphan_order_.end()};
}

} // namespace wfchain::chain
