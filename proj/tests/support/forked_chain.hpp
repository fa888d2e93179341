#pragma once

// The example chain: main branch 0-1-2-3-4, side branch 2b/3b off block 1,
// and block 6 whose parent 5 is withheld. Transactions are opaque and every
// workflow check passes.

#include <map>
#include <string>

#include <wfchain/chain/chain.hpp>

namespace wfchain::testing {

class PermissiveMachine : public chain::StateMachine {
public:
    chain::Verdict validate(const chain::Transaction&, std::span<const chain::Transaction>) override
    {
        return chain::Verdict::valid();
    }
    void apply_block(const chain::Block& b) override { ++applied; last_applied = b.hash; }
    void revert_blocks(const std::vector<chain::BlockPtr>& undone, const chain::Block&) override
    {
        reverted += undone.size();
    }

    std::size_t applied = 0;
    std::size_t reverted = 0;
    Digest last_applied;
};

struct ForkedChain {
    static constexpr unsigned kDifficulty = 4;

    NodeIdentity author{"n1", KeyPair::from_seed(std::vector<std::uint8_t>(32, 7)), "sim:n1"};
    Membership members;
    std::map<std::string, chain::Transaction> tx;
    std::map<std::string, chain::Block> block;

    ForkedChain()
    {
        members.add(author.name, author.keys.public_key());
        for (const char* label : {"Tx11", "Tx12", "Tx13", "Tx21", "Tx22", "Tx23", "Tx21b", "Tx23b", "Tx31", "Tx32",
                                  "Tx33", "Tx31b", "Tx33b", "Tx41", "Tx51", "Tx61"}) {
            tx.emplace(label, chain::Transaction::create(author, {{"type", "Opaque"}, {"label", label}}));
        }
        const auto genesis = chain::Block::genesis("forked");
        block["0"] = genesis;
        block["1"] = make(genesis, {"Tx11", "Tx12", "Tx13"});
        block["2"] = make(block["1"], {"Tx21", "Tx22", "Tx23"});
        block["3"] = make(block["2"], {"Tx31", "Tx32", "Tx33"});
        block["4"] = make(block["3"], {"Tx41"});
        block["2b"] = make(block["1"], {"Tx21b", "Tx22", "Tx23b"});
        block["3b"] = make(block["2b"], {"Tx31b", "Tx32", "Tx33b"});
        block["5"] = make(block["4"], {"Tx51"});
        block["6"] = make(block["5"], {"Tx61"});
    }

    chain::ChainParams params() const
    {
        chain::ChainParams p;
        p.network_id = "forked";
        p.difficulty = kDifficulty;
        return p;
    }

    chain::Block make(const chain::Block& parent, std::initializer_list<const char*> labels)
    {
        chain::Block b;
        b.prev_hash = parent.hash;
        b.height = parent.height + 1;
        b.miner = author.name;
        for (const auto* l : labels) b.transactions.push_back(tx.at(l));
        if (!chain::grind(b, 0, 1u << 20, kDifficulty)) throw std::runtime_error("forked chain: grind failed");
        return b;
    }
};

} // namespace wfchain::testing
