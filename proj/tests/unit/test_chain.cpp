#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <wfchain/chain/block_log.hpp>
#include <wfchain/chain/chain.hpp>

#include "../support/forked_chain.hpp"

using namespace wfchain;
using namespace wfchain::chain;

namespace {

std::set<std::string> labels(const std::vector<Transaction>& txs)
{
    std::set<std::string> out;
    for (const auto& t : txs) out.insert(t.body().at("label").get<std::string>());
    return out;
}

std::vector<std::string> hashes(const std::vector<BlockPtr>& blocks)
{
    std::vector<std::string> out;
    for (const auto& b : blocks) out.push_back(b->hash.hex());
    return out;
}

class CountingMachine : public testing::PermissiveMachine {
public:
    // Rejects transactions whose label is in `banned`.
    std::set<std::string> banned;
    Verdict validate(const Transaction& tx, std::span<const Transaction> pending) override
    {
        if (banned.contains(tx.body().value("label", ""))) return Verdict::invalid("Banned");
        return PermissiveMachine::validate(tx, pending);
    }
};

} // namespace

TEST_CASE("forked chain: blocks on the main branch are confirmed at depth two")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const char* b : {"1", "2", "3", "4"}) {
        const auto events = c.receive_block(f.block.at(b));
        REQUIRE(events.size() == 1);
        CHECK(std::holds_alternative<HeadAdvanced>(events[0]));
    }
    CHECK(c.height() == 4);
    CHECK(c.confirmation_depth(f.block["4"].hash) == 0);
    CHECK(c.confirmation_depth(f.block["2"].hash) == 2);
    CHECK(c.confirmation_depth(f.block["1"].hash) == 3);
    for (const char* t : {"Tx21", "Tx22", "Tx23"}) {
        const auto h = c.main_height_of(f.tx.at(t).id());
        REQUIRE(h.has_value());
        CHECK(c.height() - *h >= 2);
    }
    CHECK(c.get_predecessor(f.block["4"].hash)->hash == f.block["3"].hash);
    CHECK(c.get_predecessor(c.genesis().hash) == nullptr);
    CHECK(hashes(c.chain_from(c.genesis().hash))
          == std::vector<std::string>{f.block["1"].hash.hex(), f.block["2"].hash.hex(), f.block["3"].hash.hex(),
                                      f.block["4"].hash.hex()});
    CHECK(c.chain_from(c.head().hash).empty());
    CHECK(c.chain_from(digest("unknown")).size() == 4);
}

TEST_CASE("forked chain: block 4 reorganises onto the longer branch")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const char* b : {"1", "2b", "3b"}) c.receive_block(f.block.at(b));
    REQUIRE(c.head().hash == f.block["3b"].hash);

    CHECK(c.receive_block(f.block["2"]).empty());
    CHECK(c.receive_block(f.block["3"]).empty());
    CHECK(c.head().hash == f.block["3b"].hash);

    const auto events = c.receive_block(f.block["4"]);
    REQUIRE(events.size() == 1);
    const auto* reorg = std::get_if<Reorganized>(&events[0]);
    REQUIRE(reorg != nullptr);
    CHECK(hashes(reorg->undone) == std::vector<std::string>{f.block["3b"].hash.hex(), f.block["2b"].hash.hex()});
    CHECK(hashes(reorg->applied)
          == std::vector<std::string>{f.block["2"].hash.hex(), f.block["3"].hash.hex(), f.block["4"].hash.hex()});
    CHECK(labels(reorg->returned) == std::set<std::string>{"Tx21b", "Tx23b", "Tx31b", "Tx33b"});
    CHECK(reorg->dropped.empty());
    CHECK(labels(c.pool()) == std::set<std::string>{"Tx21b", "Tx23b", "Tx31b", "Tx33b"});
    CHECK(c.head().hash == f.block["4"].hash);
    CHECK_FALSE(c.confirmation_depth(f.block["3b"].hash).has_value());
    CHECK(engine.reverted == 2);
    CHECK(engine.applied == 3 + 3);
}

TEST_CASE("forked chain: block 6 without its parent is held as an orphan")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const char* b : {"1", "2", "3", "4"}) c.receive_block(f.block.at(b));

    auto events = c.receive_block(f.block["6"]);
    REQUIRE(events.size() == 1);
    const auto* held = std::get_if<OrphanHeld>(&events[0]);
    REQUIRE(held != nullptr);
    CHECK(held->missing == f.block["5"].hash);
    CHECK(c.get_predecessor(f.block["6"].hash) == nullptr);
    CHECK_FALSE(c.confirmation_depth(f.block["6"].hash).has_value());
    CHECK(c.orphans().size() == 1);

    events = c.receive_block(f.block["5"]);
    CHECK(events.size() == 2);
    CHECK(c.head().hash == f.block["6"].hash);
    CHECK(c.orphans().empty());
}

TEST_CASE("forked chain: reorganisation is independent of arrival order")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    // 4 arrives before its ancestors: orphan first, then linked.
    for (const char* b : {"1", "2b", "3b", "4", "3"}) c.receive_block(f.block.at(b));
    CHECK(c.head().hash == f.block["3b"].hash);
    const auto events = c.receive_block(f.block["2"]);
    REQUIRE(!events.empty());
    CHECK(c.head().hash == f.block["4"].hash);
    CHECK(labels(c.pool()) == std::set<std::string>{"Tx21b", "Tx23b", "Tx31b", "Tx33b"});
}

TEST_CASE("equal-height competitor keeps the incumbent")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const char* b : {"1", "2", "2b"}) c.receive_block(f.block.at(b));
    CHECK(c.head().hash == f.block["2"].hash);
    CHECK_FALSE(c.on_main_branch(f.block["2b"].hash));
}

TEST_CASE("stateless block checks")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);

    auto tampered = f.block["1"];
    tampered.nonce += 1;
    auto ev = c.receive_block(tampered);
    REQUIRE(ev.size() == 1);
    CHECK(std::get<BlockRejected>(ev[0]).reason == "BadHash");

    auto weak = f.block["1"];
    weak.nonce = 0;
    while (true) {
        weak.seal();
        if (weak.hash.leading_zero_bits() < testing::ForkedChain::kDifficulty) break;
        ++weak.nonce;
    }
    ev = c.receive_block(weak);
    CHECK(std::get<BlockRejected>(ev[0]).reason == "InsufficientWork");

    NodeIdentity outsider{"mallory", KeyPair::generate(), ""};
    auto forged = f.make(c.genesis(), {});
    forged.transactions.push_back(Transaction::create(outsider, {{"type", "Opaque"}, {"label", "evil"}}));
    REQUIRE(grind(forged, 0, 1u << 20, testing::ForkedChain::kDifficulty));
    ev = c.receive_block(forged);
    CHECK(std::get<BlockRejected>(ev[0]).reason == "BadTransactionSignature");
    CHECK(c.height() == 0);
}

TEST_CASE("a block with an invalid transaction is rejected whole")
{
    testing::ForkedChain f;
    CountingMachine engine;
    engine.banned = {"Tx22"};
    Chain c(f.params(), f.members, engine);
    c.receive_block(f.block["1"]);
    const auto ev = c.receive_block(f.block["2"]);
    REQUIRE(ev.size() == 1);
    CHECK(std::get<BlockRejected>(ev[0]).reason.starts_with("Banned"));
    CHECK(c.height() == 1);
    // Descendants of a rejected block are rejected too.
    const auto ev3 = c.receive_block(f.block["3"]);
    CHECK(std::get<BlockRejected>(ev3[0]).reason == "InvalidAncestor");
}

TEST_CASE("failed reorganisation restores the old branch")
{
    testing::ForkedChain f;
    CountingMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const char* b : {"1", "2b", "3b", "2", "3"}) c.receive_block(f.block.at(b));
    engine.banned = {"Tx41"};
    const auto ev = c.receive_block(f.block["4"]);
    REQUIRE(ev.size() == 1);
    CHECK(std::holds_alternative<BlockRejected>(ev[0]));
    CHECK(c.head().hash == f.block["3b"].hash);
    CHECK(c.height() == 3);
    CHECK(c.pool().empty());
}

TEST_CASE("transaction submission")
{
    testing::ForkedChain f;
    CountingMachine engine;
    engine.banned = {"bad"};
    Chain c(f.params(), f.members, engine);
    const auto a = Transaction::create(f.author, {{"type", "Opaque"}, {"label", "a"}});
    const auto b = Transaction::create(f.author, {{"type", "Opaque"}, {"label", "b"}});
    CHECK(c.submit_transaction(a).status == SubmitStatus::Accepted);
    CHECK(c.submit_transaction(b).status == SubmitStatus::Accepted);
    CHECK(c.submit_transaction(a).status == SubmitStatus::Duplicate);
    CHECK(c.submit_transaction(a).accepted());
    CHECK(c.pool().size() == 2);
    CHECK(c.pool()[0] == a);
    CHECK(c.pool()[1] == b);

    const auto bad = c.submit_transaction(Transaction::create(f.author, {{"type", "Opaque"}, {"label", "bad"}}));
    CHECK(bad.status == SubmitStatus::Rejected);
    CHECK(bad.code == "InvalidWorkflowAction");
    CHECK(bad.reason == "Banned");

    NodeIdentity outsider{"mallory", KeyPair::generate(), ""};
    const auto foreign = c.submit_transaction(Transaction::create(outsider, {{"type", "Opaque"}}));
    CHECK(foreign.code == "BadSignature");

    auto json = a.to_json();
    json["label"] = "tampered";
    const auto tampered = c.submit_transaction(Transaction::from_json(json));
    CHECK(tampered.code == "BadSignature");
}

TEST_CASE("mining")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;

    SUBCASE("difficulty 0: the first nonce wins")
    {
        auto p = f.params();
        p.difficulty = 0;
        Chain c(p, f.members, engine);
        const auto r = c.mine_step("n1", 1);
        REQUIRE(r.block.has_value());
        CHECK(r.block->nonce == 0);
        CHECK(c.height() == 1);
    }
    SUBCASE("difficulty 8: hash has at least 8 leading zero bits")
    {
        auto p = f.params();
        p.difficulty = 8;
        Chain c(p, f.members, engine);
        c.submit_transaction(f.tx.at("Tx11"));
        std::optional<Block> found;
        for (int i = 0; i < 1000 && !found; ++i) found = c.mine_step("n1", 256).block;
        REQUIRE(found.has_value());
        CHECK(found->compute_hash() == found->hash);
        CHECK(found->hash.leading_zero_bits() >= 8);
        CHECK(found->transactions.size() == 1);
        CHECK(c.pool().empty());
        CHECK(c.main_height_of(f.tx.at("Tx11").id()) == 1);
    }
    SUBCASE("empty pool still yields a block")
    {
        Chain c(f.params(), f.members, engine);
        std::optional<Block> found;
        for (int i = 0; i < 1000 && !found; ++i) found = c.mine_step("n1", 64).block;
        REQUIRE(found.has_value());
        CHECK(found->transactions.empty());
        CHECK(c.height() == 1);
    }
}

TEST_CASE("pool never overlaps the main branch")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const char* t : {"Tx11", "Tx12", "Tx21"}) c.submit_transaction(f.tx.at(t));
    c.receive_block(f.block["1"]);
    CHECK(labels(c.pool()) == std::set<std::string>{"Tx21"});
    CHECK(c.submit_transaction(f.tx.at("Tx11")).status == SubmitStatus::Duplicate);
    c.receive_block(f.block["2"]);
    CHECK(c.pool().empty());
}

TEST_CASE("orphan pool is bounded")
{
    testing::ForkedChain f;
    testing::PermissiveMachine engine;
    auto p = f.params();
    p.orphan_capacity = 1;
    Chain c(p, f.members, engine);
    c.receive_block(f.block["3"]);
    c.receive_block(f.block["6"]);
    REQUIRE(c.orphans().size() == 1);
    CHECK(c.orphans()[0]->hash == f.block["6"].hash);
}

TEST_CASE("block JSON round trip")
{
    testing::ForkedChain f;
    const auto& b = f.block["2"];
    const auto back = Block::from_json(parse_canonical(canonical_bytes(b.to_json())));
    CHECK(back.hash == b.hash);
    CHECK(back.transactions.size() == 3);
    CHECK(back.transactions[1] == b.transactions[1]);

    auto j = b.to_json();
    j["nonce"] = j["nonce"].get<std::uint64_t>() + 1;
    CHECK_THROWS_AS(Block::from_json(j), FormatError);
    CHECK_THROWS_AS(Block::from_json(Json::object()), FormatError);
}

TEST_CASE("block log replays and tolerates a torn tail")
{
    testing::ForkedChain f;
    const auto path = std::filesystem::temp_directory_path() / "wfchain_blocklog_test.jsonl";
    std::filesystem::remove(path);
    {
        BlockLog log(path);
        for (const char* b : {"1", "2", "3"}) log.append(f.block.at(b));
    }
    {
        std::ofstream torn(path, std::ios::app);
        torn << "{\"block_hash\":\"00";
    }
    const auto blocks = BlockLog::load(path);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[2].hash == f.block["3"].hash);

    testing::PermissiveMachine engine;
    Chain c(f.params(), f.members, engine);
    for (const auto& b : blocks) c.receive_block(b);
    CHECK(c.head().hash == f.block["3"].hash);

    {
        std::ofstream broken(path, std::ios::app);
        broken << "\n{}\n";
    }
    CHECK_THROWS_AS(BlockLog::load(path), FormatError);
    std::filesystem::remove(path);
}
