#include <doctest.h>

#include <wfchain/worklist/worklist.hpp>

#include "../support/harness.hpp"
#include "../support/random_workflows.hpp"

using namespace wfchain;
using namespace wfchain::testing;
using engine::Design;
using worklist::Status;
using worklist::Worklist;

namespace {

const char* kCase = "7b0c1f5e-2222-4aaa-8bbb-000000000001";

void mine(Rig& r, std::initializer_list<Worklist*> lists)
{
    r.mine();
    for (auto* w : lists) w->on_chain_events(r.events);
}

const worklist::WorkItem* item_for(const Worklist& w, const std::string& transition)
{
    return w.live_item(kCase, transition);
}

chain::SubmitResult complete(Rig& r, Worklist& w, const std::string& item_id, const Json& outputs = Json::object())
{
    const auto* item = w.find(item_id);
    REQUIRE(item != nullptr);
    const auto d = r.engine->draft_completion(item->case_id, item->transition, outputs, r.chain.pool());
    chain::SubmitResult res;
    std::optional<chain::Transaction> tx;
    if (d.body) {
        tx = sign(w.node(), *d.body);
        res = r.chain.submit_transaction(*tx);
    } else {
        tx = sign(w.node(), {{"type", "Noop"}});
        res = {chain::SubmitStatus::Rejected, "InvalidWorkflowAction", d.error.code, d.error.detail};
    }
    w.on_pool_result(item_id, *tx, res);
    return res;
}

void start(Rig& r, const Json& model, std::initializer_list<Worklist*> lists)
{
    REQUIRE(r.install(model).accepted());
    mine(r, lists);
    REQUIRE(r.launch(model.at("name").get<std::string>(), kCase).accepted());
    mine(r, lists);
}

} // namespace

TEST_CASE("worklist: fresh node lists nothing")
{
    Rig r(Design::Actions, "n1");
    Worklist w("n1", Design::Actions, 2, r.chain);
    const auto view = w.list_view();
    CHECK(view["items"].empty());
    CHECK(view["pending"].empty());
    CHECK(view["cases"].empty());
    CHECK(view["visible"]["height"] == 0);
}

TEST_CASE("worklist: depth two hides mined work until confirmed")
{
    for (const auto design : {Design::Actions, Design::States}) {
        CAPTURE(engine::to_string(design));
        Rig r(design, "n1");
        Worklist w1("n1", design, 2, r.chain);
        Worklist w2("n2", design, 2, r.chain);
        start(r, seq_model(), {&w1, &w2});
        // Launch mined at height 2, visible at height 0.
        CHECK(item_for(w1, "A") == nullptr);
        mine(r, {&w1, &w2});
        CHECK(item_for(w1, "A") == nullptr);
        mine(r, {&w1, &w2});
        const auto* a = item_for(w1, "A");
        REQUIRE(a != nullptr);
        CHECK(a->status == Status::Worklisted);
        CHECK(a->inputs == Json{{"x", 0}});
        CHECK(item_for(w2, "A") == nullptr); // assigned to n1 only
        const auto a_id = a->id;

        REQUIRE(complete(r, w1, a_id, {{"x", 5}}).accepted());
        CHECK(w1.find(a_id)->status == Status::PendingInPool);
        CHECK(w1.actionable().empty());
        const auto view = w1.list_view();
        REQUIRE(view["pending"].size() == 1);
        CHECK(view["pending"][0]["status"] == "Pending");

        mine(r, {&w1, &w2});
        CHECK(w1.find(a_id)->status == Status::Mined);
        CHECK(w1.find(a_id)->depth == 0);
        CHECK(item_for(w2, "B") == nullptr);
        mine(r, {&w1, &w2});
        CHECK(w1.find(a_id)->depth == 1);
        CHECK(w1.list_view()["pending"][0]["depth"] == 1);
        CHECK(item_for(w2, "B") == nullptr);
        mine(r, {&w1, &w2});
        CHECK(w1.find(a_id)->status == Status::Confirmed);
        const auto* b = item_for(w2, "B");
        REQUIRE(b != nullptr);
        CHECK(b->inputs == Json{{"x", 5}});
    }
}

TEST_CASE("worklist: depth zero confirms at mining")
{
    Rig r(Design::Actions, "n1");
    Worklist w("n1", Design::Actions, 0, r.chain);
    start(r, seq_model("n1", "n1"), {&w});
    const auto a = item_for(w, "A")->id;
    REQUIRE(complete(r, w, a, {{"x", 1}}).accepted());
    mine(r, {&w});
    CHECK(w.find(a)->status == Status::Confirmed);
    CHECK(item_for(w, "B") != nullptr);
}

TEST_CASE("worklist: rejected completion keeps the item and allows retry")
{
    Rig r(Design::Actions, "n1");
    Worklist w("n1", Design::Actions, 1, r.chain);
    start(r, seq_model(), {&w});
    mine(r, {&w});
    const auto a = item_for(w, "A")->id;
    const auto res = complete(r, w, a, {{"x", 42}});
    CHECK(res.reason == "ConstraintViolation");
    CHECK(w.find(a)->status == Status::Worklisted);
    CHECK(w.find(a)->notice.has_value());
    CHECK(w.alerts_since(0).back().severity == worklist::Severity::Warn);
    CHECK(complete(r, w, a, {{"x", 4}}).accepted());
    CHECK(w.find(a)->status == Status::PendingInPool);
    CHECK_FALSE(w.find(a)->notice.has_value());
}

TEST_CASE("worklist: deferred choice sibling is withdrawn only at confirmation")
{
    Rig r(Design::Actions, "n1");
    Worklist w1("n1", Design::Actions, 2, r.chain);
    Worklist w2("n2", Design::Actions, 2, r.chain);
    Worklist w3("n3", Design::Actions, 2, r.chain);
    Json model = dc_model("n1", "n2");
    // A third local sibling that nobody attempts.
    model["transitions"].push_back(
        {{"name", "C"}, {"actor", "n3"}, {"in_arcs", {{"p0", 1}}}, {"out_arcs", {{"pB", 1}}}});
    start(r, model, {&w1, &w2, &w3});
    mine(r, {&w1, &w2, &w3});
    mine(r, {&w1, &w2, &w3});
    const auto a = item_for(w1, "A")->id;
    const auto b = item_for(w2, "B")->id;
    const auto c = w3.live_item(kCase, "C")->id;

    REQUIRE(complete(r, w1, a, {{"choice", "a"}}).accepted());
    const auto lost = complete(r, w2, b, {{"choice", "b"}});
    CHECK(lost.reason == "NotEnabledAfterPending");
    CHECK(w2.find(b)->status == Status::Worklisted);
    for (int i = 0; i < 2; ++i) {
        mine(r, {&w1, &w2, &w3});
        CHECK(w2.find(b)->status == Status::Worklisted);
        CHECK(w3.find(c)->status == Status::Worklisted);
    }
    mine(r, {&w1, &w2, &w3});
    CHECK(w1.find(a)->status == Status::Confirmed);
    CHECK(w2.find(b)->status == Status::Rejected);
    CHECK(w3.find(c)->status == Status::Withdrawn);
}

TEST_CASE("worklist: reorganisation returns or undoes local work")
{
    for (const auto design : {Design::Actions, Design::States}) {
        CAPTURE(engine::to_string(design));
        Rig a(design, "n1");
        Rig b(design, "n2");
        Worklist w("n1", design, 1, a.chain);
        Worklist deep("n1", design, 3, a.chain);
        // Shared prefix: model + case, then an extra block so A and B are visible.
        start(a, dc_model("n1", "n1"), {&w, &deep});
        mine(a, {&w, &deep});
        for (const auto& blk : a.chain.chain_from(b.chain.genesis().hash)) b.chain.receive_block(*blk);
        const auto item_a = item_for(w, "A")->id;
        const auto item_b = item_for(w, "B")->id;

        const auto adopt_b = [&] {
            int reorgs = 0;
            for (const auto& blk : b.chain.chain_from(a.chain.genesis().hash)) {
                const auto events = a.chain.receive_block(*blk);
                for (const auto& ev : events) reorgs += std::holds_alternative<chain::Reorganized>(ev) ? 1 : 0;
                w.on_chain_events(events);
                deep.on_chain_events(events);
            }
            CHECK(reorgs == 1);
            CHECK(a.chain.head().hash == b.chain.head().hash);
        };
        const auto has_undone_alert = [&] {
            for (const auto& al : w.alerts_since(0)) {
                if (al.kind == "undone" && al.item == item_a) return true;
            }
            return false;
        };

        REQUIRE(complete(a, w, item_a, {{"choice", "a"}}).accepted());
        mine(a, {&w, &deep});
        mine(a, {&w, &deep});
        CHECK(w.find(item_a)->status == Status::Confirmed);
        CHECK(w.find(item_b)->status == Status::Withdrawn);

        SUBCASE("side branch transaction returns to the pool")
        {
            for (int i = 0; i < 3; ++i) b.mine();
            adopt_b();
            CHECK(w.find(item_a)->status == Status::PendingInPool);
            CHECK(a.chain.in_pool(*w.find(item_a)->tx));
            // Visible state is back before the choice: B is offered again, A stays in flight.
            CHECK(item_for(w, "A")->id == item_a);
            REQUIRE(item_for(w, "B") != nullptr);
            CHECK(item_for(w, "B")->id != item_b);
            CHECK(has_undone_alert());
            CHECK(w.list_view()["undone"].size() == 1);
            CHECK(w.list_view()["undone"][0]["fate"] == "returned");
        }
        SUBCASE("contradicted transaction is undone")
        {
            REQUIRE(b.complete("n1", kCase, "B", {{"choice", "b"}}).accepted());
            for (int i = 0; i < 3; ++i) b.mine();
            adopt_b();
            CHECK(w.find(item_a)->status == Status::Undone);
            CHECK_FALSE(a.chain.in_pool(*w.find(item_a)->tx));
            CHECK(has_undone_alert());
            // Depth one already sees B; depth three is back before the choice.
            CHECK(item_for(w, "A") == nullptr);
            CHECK(item_for(w, "B") == nullptr);
            REQUIRE(deep.live_item(kCase, "A") != nullptr);
            CHECK(deep.live_item(kCase, "A")->status == Status::Worklisted);
            CHECK(deep.live_item(kCase, "B") != nullptr);
            CHECK(w.list_view()["undone"][0]["fate"] == "dropped");
        }
    }
}

TEST_CASE("worklist: visible state equals replay to head minus K under forks")
{
    for (const auto design : {Design::Actions, Design::States}) {
        for (const unsigned k : {0u, 1u, 3u}) {
            CAPTURE(engine::to_string(design));
            CAPTURE(k);
            Rng rng(41 + k);
            Rig a(design, "n1");
            Rig b(design, "n2");
            Worklist w("n1", design, k, a.chain);
            std::size_t counter = 0;
            for (int round = 0; round < 25; ++round) {
                for (auto* rig : {&a, &b}) {
                    for (int i = 0; i < 3; ++i) {
                        if (auto tx = random_candidate(rng, *rig->engine, rig->chain.pool(), counter)) {
                            rig->chain.submit_transaction(*tx);
                        }
                    }
                }
                std::vector<chain::Block> fork;
                const int len = 1 + static_cast<int>(rng.below(3));
                for (int i = 0; i < len; ++i) fork.push_back(b.mine());
                mine(a, {&w});
                for (const auto& blk : fork) w.on_chain_events(a.chain.receive_block(blk));
                for (const auto& blk : a.chain.chain_from(b.chain.head().hash)) b.chain.receive_block(*blk);

                const auto h = a.chain.height() >= k ? a.chain.height() - k : 0;
                std::vector<chain::BlockPtr> prefix;
                for (std::uint64_t i = 1; i <= h; ++i) prefix.push_back(a.chain.main_at(i));
                const auto fresh = engine::replay(design, "n1", prefix);
                REQUIRE_FALSE(fresh.failure.has_value());
                REQUIRE(canonical_bytes(fresh.engine->state_json()) == canonical_bytes(w.visible().state_json()));
                // Worklisted items are exactly the locally enabled pairs of the visible state.
                std::size_t enabled = 0;
                for (const auto& c : w.visible().cases()) {
                    if (petri::case_status(*c.model, c.state.marking) != petri::CaseStatus::Running) continue;
                    for (const auto& t : petri::enabled_transitions(*c.model, c.state.marking)) {
                        if (c.model->at(t).actor != "n1") continue;
                        ++enabled;
                        REQUIRE(w.live_item(c.state.case_id, t) != nullptr);
                    }
                }
                std::size_t live = 0;
                for (const auto& item : w.all_items()) live += item.status == Status::Worklisted ? 1 : 0;
                REQUIRE(live <= enabled);
            }
        }
    }
}
