#include <wfchain/sim/runner.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include <wfchain/node/node.hpp>
#include <wfchain/petrinet/semantics.hpp>

namespace wfchain::sim {

namespace {

using chain::BlockPtr;

std::vector<BlockPtr> main_blocks(const chain::Chain& c, std::uint64_t up_to)
{
    std::vector<BlockPtr> out;
    for (std::uint64_t h = 1; h <= up_to; ++h) out.push_back(c.main_at(h));
    return out;
}

std::string short_hex(const Digest& d)
{
    return d.hex().substr(0, 12);
}

struct SimNode {
    const NodeSpec* spec = nullptr;
    std::unique_ptr<node::Node> node;
    std::set<std::string> neighbours;
};

struct PendingAction {
    const ActionSpec* spec = nullptr;
    bool done = false;
};

struct Submission {
    std::string node;
    Digest tx;
    unsigned depth = 0;
    std::uint64_t submitted = 0;
    std::optional<std::uint64_t> confirmed;
};

struct Attempt {
    std::string node;
    std::string case_id;
    std::string transition;
    int status = 0;
};

class Runner {
public:
    Runner(const Scenario& sc, const RunOptions& opt)
        : sc_(sc), opt_(opt), seed_(opt.seed.value_or(sc.seed)), design_(opt.design.value_or(sc.design)),
          net_(seed_ ^ 0x6e6574776f726bULL, sc.latency), mining_rng_(seed_ ^ 0x6d696e696e67ULL)
    {
        res_.scenario = sc.name;
        res_.seed = seed_;
        res_.design = design_;
    }

    RunResult run()
    {
        setup();
        for (tick_ = 0; tick_ < sc_.max_ticks; ++tick_) {
            step();
            if (sc_.quiescence && quiescent()) {
                res_.quiescent = true;
                break;
            }
        }
        finish();
        return std::move(res_);
    }

private:
    void record(const std::string& node, const std::string& event, Json data)
    {
        if (!opt_.record_trace) return;
        res_.trace.push_back(
            canonical_bytes(Json{{"tick", tick_}, {"node", node}, {"event", event}, {"data", std::move(data)}}));
    }

    SimNode& at(const std::string& name) { return nodes_[index_.at(name)]; }

    void setup()
    {
        for (const auto& spec : sc_.nodes) {
            const auto seed = digest("sim-key:" + spec.name);
            keys_.emplace(spec.name, KeyPair::from_seed(seed.bytes()));
            members_.add(spec.name, keys_.at(spec.name).public_key());
        }
        for (const auto& [a, b] : sc_.edges) {
            neighbours_[a].insert(b);
            neighbours_[b].insert(a);
        }
        for (const auto& spec : sc_.nodes) {
            net_.add_node(spec.name);
            node::NodeSettings s;
            s.identity = {spec.name, keys_.at(spec.name), "sim:" + spec.name};
            s.network_id = "sim-" + sc_.name;
            s.members = members_;
            for (const auto& peer : neighbours_[spec.name]) s.peers.push_back({peer, "sim:" + peer, *members_.find(peer)});
            s.design = design_;
            s.confirmation_depth = spec.confirmation_depth;
            s.difficulty = sc_.difficulty;
            s.handlers = spec.handlers;
            s.seed = seed_;
            index_[spec.name] = nodes_.size();
            nodes_.push_back({&spec, std::make_unique<node::Node>(std::move(s)), neighbours_[spec.name]});
        }
        for (const auto& l : sc_.links) net_.set_link_latency(l.a, l.b, l.latency);
        for (const auto& p : sc_.partitions) {
            net_.add_partition(p);
            last_partition_end_ = std::max(last_partition_end_, p.until);
        }
        for (const auto& a : sc_.actions) actions_.push_back({&a, false});
        for (const auto& spec : sc_.nodes) {
            if (spec.mining_rate > 0 && (!drain_miner_ || spec.mining_rate > drain_miner_->mining_rate)) {
                drain_miner_ = &spec;
            }
        }

        Json header = {{"scenario", sc_.name}, {"seed", seed_}, {"design", std::string(engine::to_string(design_))},
                       {"nodes", Json::array()}};
        for (const auto& n : sc_.nodes) header["nodes"].push_back(n.name);
        record("", "scenario", std::move(header));
    }

    void step()
    {
        if (tick_ == 0) {
            for (const auto& [a, b] : sc_.edges) {
                if (net_.reachable(a, b, 0)) connect(a, b);
            }
            auto& installer = at(sc_.installer);
            for (const auto& m : sc_.models) {
                const auto r = installer.node->submit_model(m);
                note_submission(installer, r);
                record(installer.spec->name, "action", {{"kind", "install"}, {"status", r.status}, {"body", r.body}});
                if (!r.ok()) res_.errors.push_back("model install failed: " + r.body.dump());
                flush(installer);
            }
        } else {
            for (const auto& [a, b] : net_.healed_at(tick_)) {
                if (neighbours_[a].contains(b)) {
                    record("", "healed", {{"a", a}, {"b", b}});
                    connect(a, b);
                }
            }
        }
        for (auto& pa : actions_) {
            if (!pa.done && pa.spec->tick <= tick_) attempt(pa);
        }
        deliver();
        // Once the workload has settled only one node keeps mining, so that
        // competing branches get resolved instead of being renewed forever.
        const bool draining = sc_.quiescence && workload_done();
        for (auto& n : nodes_) {
            const auto p = n.spec->mining_rate;
            if (p <= 0 || !mining_rng_.bernoulli(p)) continue;
            if (draining && n.spec != drain_miner_) continue;
            auto events = n.node->mine_block();
            const auto& head = n.node->chain().head();
            ++res_.metrics.blocks_mined;
            minted_[head.height].insert(head.hash);
            record(n.spec->name, "mined",
                   {{"height", head.height}, {"hash", head.hash.hex()}, {"txs", head.transactions.size()}});
            check_events(n, events);
            flush(n);
        }
        deliver();
        update_latencies();
    }

    void connect(const std::string& a, const std::string& b)
    {
        auto& na = at(a);
        auto& nb = at(b);
        na.node->peer_up(b);
        nb.node->peer_up(a);
        flush(na);
        flush(nb);
    }

    void flush(SimNode& n)
    {
        const auto& name = n.spec->name;
        for (auto& out : n.node->take_outbound()) {
            if (!n.neighbours.contains(out.to)) continue;
            net_.send(tick_, name, out.to, p2p::encode_message(out.msg));
        }
        for (auto& ev : n.node->take_events()) {
            // Handler-driven completions are local submissions too.
            if (ev.name == "handler" && ev.data.value("ok", false) && ev.data.contains("result")) {
                node::ActionResult r;
                r.body = ev.data["result"];
                note_submission(n, r);
            }
            record(name, ev.name, std::move(ev.data));
        }
    }

    void deliver()
    {
        while (true) {
            auto batch = net_.due(tick_);
            if (batch.empty()) return;
            for (auto& d : batch) {
                auto& n = at(d.to);
                p2p::Message msg;
                try {
                    msg = p2p::decode_message(d.frame, members_);
                } catch (const std::exception& e) {
                    record(d.to, "bad_frame", {{"from", d.from}, {"error", e.what()}});
                    continue;
                }
                check_events(n, n.node->receive(msg));
                flush(n);
            }
        }
    }

    void attempt(PendingAction& pa)
    {
        const auto& a = *pa.spec;
        auto& n = at(a.node);
        const bool expired = tick_ >= a.tick + a.wait;
        node::ActionResult r;
        if (a.kind == ActionSpec::Kind::Launch) {
            r = n.node->launch_case(a.model, a.case_id);
            if (!r.ok() && r.body.value("reason", "") == "UnknownModel" && !expired) return;
        } else {
            const auto* item = n.node->worklist().live_item(a.case_id, a.transition);
            if (item == nullptr || item->status != worklist::Status::Worklisted) {
                if (a.optional && case_closed(n, a.case_id)) {
                    pa.done = true;
                    record(a.node, "action", {{"spec", a.to_json()}, {"status", "case_closed"}});
                    return;
                }
                if (!expired) return;
                pa.done = true;
                record(a.node, "action", {{"spec", a.to_json()}, {"status", "gave_up"}});
                if (!a.optional) {
                    res_.errors.push_back("tick " + std::to_string(tick_) + ": " + a.node + " found no work item for " +
                                          a.case_id + "/" + a.transition);
                }
                return;
            }
            r = n.node->complete_item(item->id, a.outputs);
            attempts_.push_back({a.node, a.case_id, a.transition, r.status});
        }
        pa.done = true;
        record(a.node, "action", {{"spec", a.to_json()}, {"status", r.status}, {"body", r.body}});
        if (r.ok()) {
            note_submission(n, r);
        } else if (a.kind == ActionSpec::Kind::Launch && !a.optional) {
            res_.errors.push_back("tick " + std::to_string(tick_) + ": launch of " + a.case_id + " on " + a.node +
                                  " failed: " + r.body.dump());
        }
        flush(n);
    }

    static bool case_closed(const SimNode& n, const std::string& case_id)
    {
        const auto c = n.node->worklist().visible().find_case(case_id);
        return c && petri::case_status(*c->model, c->state.marking) != petri::CaseStatus::Running;
    }

    void note_submission(const SimNode& n, const node::ActionResult& r)
    {
        if (!r.ok() || !r.body.contains("tx")) return;
        subs_.push_back({n.spec->name, Digest::from_hex(r.body["tx"].get<std::string>()), n.spec->confirmation_depth,
                         tick_, std::nullopt});
    }

    void check_events(SimNode& n, const std::vector<chain::ChainEvent>& events)
    {
        for (const auto& ev : events) {
            if (const auto* r = std::get_if<chain::Reorganized>(&ev)) {
                ++res_.metrics.reorgs;
                check_reorg(n, *r);
            }
        }
    }

    void check_reorg(SimNode& n, const chain::Reorganized& r)
    {
        ++res_.reorg_checks;
        const auto& name = n.spec->name;
        const auto& c = n.node->chain();
        const auto where = name + " at tick " + std::to_string(tick_);

        for (const auto& b : r.undone) {
            for (const auto& tx : b->transactions) {
                if (!c.main_height_of(tx.id())) undone_.insert(tx.id());
            }
        }

        auto full = engine::replay(design_, name, main_blocks(c, c.height()));
        if (full.failure) {
            res_.invalid_confirmed.push_back(where + ": new main branch: " + *full.failure);
        } else if (full.engine->state_json() != n.node->engine().state_json()) {
            res_.reorg_mismatches.push_back(where + ": engine state differs from replay of the new branch");
        }

        const auto k = n.spec->confirmation_depth;
        const auto visible_height = c.height() >= k ? c.height() - k : 0;
        auto vis = engine::replay(design_, name, main_blocks(c, visible_height));
        if (!vis.failure && vis.engine->state_json() != n.node->worklist().visible().state_json()) {
            res_.reorg_mismatches.push_back(where + ": visible state differs from replay to head-K");
        }

        if (r.undone.empty()) return;
        const auto fork_height = r.undone.back()->height - 1;
        auto old = main_blocks(c, fork_height);
        for (auto it = r.undone.rbegin(); it != r.undone.rend(); ++it) old.push_back(*it);
        auto prior = engine::replay(design_, name, old);
        if (prior.failure) res_.invalid_confirmed.push_back(where + ": abandoned branch: " + *prior.failure);
    }

    void update_latencies()
    {
        for (auto& s : subs_) {
            if (s.confirmed) continue;
            const auto& c = at(s.node).node->chain();
            const auto h = c.main_height_of(s.tx);
            if (h && c.height() - *h >= s.depth) s.confirmed = tick_;
        }
    }

    bool buried(const SimNode& n) const
    {
        const auto& c = n.node->chain();
        const auto k = n.spec->confirmation_depth;
        for (std::uint64_t d = 0; d < k && d < c.height(); ++d) {
            if (!c.main_at(c.height() - d)->transactions.empty()) return false;
        }
        return true;
    }

    bool workload_done() const
    {
        if (tick_ < last_partition_end_) return false;
        for (const auto& pa : actions_) {
            if (!pa.done) return false;
        }
        for (const auto& n : nodes_) {
            if (!n.node->chain().pool().empty() || !buried(n)) return false;
        }
        return true;
    }

    bool quiescent() const
    {
        if (net_.in_flight() != 0 || !workload_done()) return false;
        const auto& head = nodes_.front().node->chain().head().hash;
        for (const auto& n : nodes_) {
            if (n.node->chain().head().hash != head) return false;
        }
        return true;
    }

    void finish()
    {
        auto& m = res_.metrics;
        m.ticks = tick_ + (res_.quiescent ? 1 : 0);
        for (const auto& [h, hashes] : minted_) {
            if (hashes.size() > 1) ++m.forks;
        }
        m.undone_txs = undone_.size();
        m.messages_sent = net_.stats().sent;
        m.messages_dropped = net_.stats().dropped;
        m.transactions = subs_.size();

        std::vector<std::uint64_t> lat;
        for (const auto& s : subs_) {
            if (!s.confirmed) continue;
            res_.latencies.push_back({s.node, s.tx.hex(), s.submitted, *s.confirmed});
            lat.push_back(*s.confirmed - s.submitted);
        }
        m.confirmed = lat.size();
        if (!lat.empty()) {
            std::sort(lat.begin(), lat.end());
            double sum = 0;
            for (auto v : lat) sum += static_cast<double>(v);
            m.mean_latency = sum / static_cast<double>(lat.size());
            m.p50_latency = lat[lat.size() / 2];
            m.max_latency = lat.back();
        }

        std::set<Digest> seen;
        for (auto& n : nodes_) {
            const auto& c = n.node->chain();
            NodeFinal f;
            f.name = n.spec->name;
            f.confirmation_depth = n.spec->confirmation_depth;
            f.height = c.height();
            f.head = c.head().hash;
            f.state_digest = n.node->engine().state_digest();
            f.visible_digest = n.node->worklist().visible().state_digest();
            f.case_states = n.node->worklist().visible().case_states_json();
            res_.finals.push_back(f);

            auto rep = engine::replay(design_, f.name, main_blocks(c, c.height()));
            if (rep.failure) res_.invalid_confirmed.push_back(f.name + " final chain: " + *rep.failure);
            else if (rep.engine->state_digest() != f.state_digest) {
                res_.reorg_mismatches.push_back(f.name + ": final engine state differs from replay");
            }

            for (const auto& b : c.stored_blocks()) {
                if (b->is_genesis() || !seen.insert(b->hash).second) continue;
                ++res_.blocks_checked;
                if (b->compute_hash() != b->hash || b->hash.leading_zero_bits() < sc_.difficulty) {
                    res_.pow_failures.push_back(f.name + ": block " + b->hash.hex());
                }
            }
            record(f.name, "final",
                   {{"height", f.height}, {"head", f.head.hex()}, {"state", f.state_digest.hex()},
                    {"visible", f.visible_digest.hex()}});
        }

        for (const auto& a : sc_.assertions) res_.assertions.push_back(evaluate(a));
        record("", "metrics", m.to_json());
        for (const auto& a : res_.assertions) {
            record("", "assertion", {{"name", a.name}, {"pass", a.pass}, {"evidence", a.evidence}});
        }
    }

    AssertionResult evaluate(const AssertionSpec& a)
    {
        if (a.name == "converged_heads") return converged();
        if (a.name == "no_invalid_confirmed") {
            Json ev = {{"invalid", res_.invalid_confirmed}, {"reorg_checks", res_.reorg_checks}};
            return {a.name, res_.invalid_confirmed.empty(), ev};
        }
        if (a.name == "deferred_choice_exclusive") return exclusive(a.params);
        if (a.name == "latency_bound") return latency_bound(a.params);
        if (a.name == "designs_equivalent") {
            if (!opt_.mirror) return {a.name, true, {{"skipped", "mirror run"}}};
            RunOptions o;
            o.seed = seed_;
            o.design = design_ == engine::Design::Actions ? engine::Design::States : engine::Design::Actions;
            o.record_trace = false;
            o.mirror = false;
            const auto other = Runner(sc_, o).run();
            return compare_designs(res_, other);
        }
        return {a.name, false, {{"error", "unknown assertion"}}};
    }

    AssertionResult converged() const
    {
        AssertionResult out{"converged_heads", res_.quiescent, Json::object()};
        const auto& f0 = res_.finals.front();
        Json heads = Json::object();
        for (const auto& f : res_.finals) {
            heads[f.name] = {{"height", f.height}, {"head", short_hex(f.head)}, {"state", short_hex(f.state_digest)},
                             {"visible", short_hex(f.visible_digest)}};
            // At quiescence every transaction is buried K deep on every node,
            // so the confirmed states agree whatever the node's K.
            if (f.head != f0.head || f.state_digest != f0.state_digest || f.visible_digest != f0.visible_digest) {
                out.pass = false;
            }
        }
        out.evidence = {{"quiescent", res_.quiescent}, {"ticks", res_.metrics.ticks}, {"nodes", heads}};
        return out;
    }

    /// Transitions of the case fired in the node's confirmed region, oldest first.
    std::vector<std::string> fired(const SimNode& n, const std::string& case_id) const
    {
        const auto& c = n.node->chain();
        const auto k = n.spec->confirmation_depth;
        const auto top = c.height() >= k ? c.height() - k : 0;
        std::vector<std::string> out;
        std::optional<petri::Marking> prev;
        petri::ModelPtr model;
        for (const auto& b : main_blocks(c, top)) {
            for (const auto& tx : b->transactions) {
                if (engine::WorkflowEngine::case_of(tx) != case_id) continue;
                const auto& body = tx.body();
                if (tx.type() == "FireTransition") {
                    out.push_back(body.at("transition").get<std::string>());
                } else if (tx.type() == "InstanceState") {
                    const auto m = petri::marking_from_json(body.at("marking"));
                    if (!model) model = model_named(body.at("model").get<std::string>());
                    if (prev && model) out.push_back(infer(*model, *prev, m));
                    prev = m;
                }
            }
        }
        return out;
    }

    petri::ModelPtr model_named(const std::string& name) const
    {
        for (const auto& doc : sc_.models) {
            if (doc.value("name", "") == name) {
                return std::make_shared<const petri::WorkflowModel>(petri::WorkflowModel::from_json(doc));
            }
        }
        return nullptr;
    }

    static std::string infer(const petri::WorkflowModel& model, const petri::Marking& from, const petri::Marking& to)
    {
        for (const auto& t : petri::enabled_transitions(model, from)) {
            if (petri::fire(model, from, t) == to) return t;
        }
        return "?";
    }

    AssertionResult exclusive(const Json& params) const
    {
        const auto case_id = params.at("case").get<std::string>();
        std::set<std::string> set;
        for (const auto& t : params.at("transitions")) set.insert(t.get<std::string>());

        AssertionResult out{"deferred_choice_exclusive", true, Json::object()};
        std::optional<std::string> winner;
        Json per_node = Json::object();
        for (const auto& n : nodes_) {
            std::vector<std::string> hits;
            for (const auto& t : fired(n, case_id)) {
                if (set.contains(t)) hits.push_back(t);
            }
            Json node_ev = {{"confirmed", hits}};
            if (hits.size() != 1) out.pass = false;
            if (!hits.empty()) {
                if (winner && *winner != hits.front()) out.pass = false;
                winner = hits.front();
            }
            Json losers = Json::array();
            for (const auto& item : n.node->worklist().all_items()) {
                if (item.case_id != case_id || !set.contains(item.transition)) continue;
                if (winner && item.transition == *winner) continue;
                losers.push_back({{"transition", item.transition}, {"status", worklist::to_string(item.status)},
                                  {"attempted_rejected", item.attempted_rejected}});
                if (item.status == worklist::Status::Confirmed || item.in_flight()) out.pass = false;
            }
            node_ev["losers"] = losers;
            per_node[n.spec->name] = node_ev;
        }
        // Whoever tried a losing transition must see it Rejected or Undone.
        Json tried = Json::array();
        for (const auto& at_ : attempts_) {
            if (at_.case_id != case_id || !set.contains(at_.transition)) continue;
            tried.push_back({{"node", at_.node}, {"transition", at_.transition}, {"status", at_.status}});
            if (winner && at_.transition == *winner) continue;
            bool settled = false;
            for (const auto& item : nodes_[index_.at(at_.node)].node->worklist().all_items()) {
                if (item.case_id == case_id && item.transition == at_.transition &&
                    (item.status == worklist::Status::Rejected || item.status == worklist::Status::Undone ||
                     item.attempted_rejected)) {
                    settled = true;
                }
            }
            if (!settled) out.pass = false;
        }
        if (!winner) out.pass = false;
        out.evidence = {{"winner", winner.value_or("")}, {"nodes", per_node}, {"attempts", tried}};
        return out;
    }

    AssertionResult latency_bound(const Json& params) const
    {
        double tolerance = 0.3;
        if (params.contains("tolerance")) tolerance = std::stod(params["tolerance"].get<std::string>());
        const std::size_t min_samples = params.value("min_samples", std::size_t{1});
        const double p = block_rate(sc_);
        double expected_sum = 0;
        double exact_sum = 0;
        for (const auto& s : res_.latencies) {
            const auto k = at_const(s.node).spec->confirmation_depth;
            expected_sum += (k + 1) / p;
            exact_sum += expected_latency(k, p);
        }
        const auto count = static_cast<double>(res_.latencies.size());
        const double expected = count > 0 ? expected_sum / count : 0;
        const double exact = count > 0 ? exact_sum / count : 0;
        const double mean = res_.metrics.mean_latency;
        const bool pass = res_.latencies.size() >= min_samples && p > 0 &&
                          std::abs(mean - expected) <= tolerance * expected;
        return {"latency_bound", pass,
                {{"samples", res_.latencies.size()},
                 {"mean", std::to_string(mean)},
                 {"expected", std::to_string(expected)},
                 {"exact_discrete", std::to_string(exact)},
                 {"tolerance", std::to_string(tolerance)},
                 {"block_rate", std::to_string(p)}}};
    }

    const SimNode& at_const(const std::string& name) const { return nodes_[index_.at(name)]; }

public:
    static AssertionResult compare_designs(const RunResult& a, const RunResult& b)
    {
        AssertionResult out{"designs_equivalent", true, Json::object()};
        Json per_node = Json::object();
        if (a.finals.size() != b.finals.size()) out.pass = false;
        for (std::size_t i = 0; i < a.finals.size() && i < b.finals.size(); ++i) {
            const auto da = digest(canonical_bytes(a.finals[i].case_states));
            const auto db = digest(canonical_bytes(b.finals[i].case_states));
            per_node[a.finals[i].name] = {{std::string(engine::to_string(a.design)), short_hex(da)},
                                          {std::string(engine::to_string(b.design)), short_hex(db)},
                                          {"cases", a.finals[i].case_states.size()}};
            if (da != db) out.pass = false;
        }
        if (!a.errors.empty() || !b.errors.empty()) out.pass = false;
        out.evidence = {{"nodes", per_node}, {"errors", a.errors.size() + b.errors.size()}};
        return out;
    }

private:
    const Scenario& sc_;
    RunOptions opt_;
    std::uint64_t seed_;
    engine::Design design_;
    RunResult res_;
    p2p::SimNetwork net_;
    Rng mining_rng_;
    Membership members_;
    std::map<std::string, KeyPair> keys_;
    std::map<std::string, std::set<std::string>> neighbours_;
    std::vector<SimNode> nodes_;
    std::map<std::string, std::size_t> index_;
    std::vector<PendingAction> actions_;
    std::vector<Submission> subs_;
    std::vector<Attempt> attempts_;
    std::map<std::uint64_t, std::set<Digest>> minted_;
    std::set<Digest> undone_;
    std::uint64_t tick_ = 0;
    std::uint64_t last_partition_end_ = 0;
    const NodeSpec* drain_miner_ = nullptr;
};

} // namespace

std::string Metrics::csv_header()
{
    return "scenario,seed,nodes,quiescent,ticks,blocks_mined,forks,reorgs,transactions,confirmed,mean_latency,"
           "p50_latency,max_latency,undone_txs,messages_sent,messages_dropped";
}

std::string Metrics::csv_row(const std::string& scenario, std::uint64_t seed, std::size_t nodes, bool quiescent) const
{
    std::ostringstream os;
    os << scenario << ',' << seed << ',' << nodes << ',' << (quiescent ? 1 : 0) << ',' << ticks << ',' << blocks_mined
       << ',' << forks << ',' << reorgs << ',' << transactions << ',' << confirmed << ',' << mean_latency << ','
       << p50_latency << ',' << max_latency << ',' << undone_txs << ',' << messages_sent << ',' << messages_dropped;
    return os.str();
}

Json Metrics::to_json() const
{
    return {{"ticks", ticks},
            {"blocks_mined", blocks_mined},
            {"forks", forks},
            {"reorgs", reorgs},
            {"transactions", transactions},
            {"confirmed", confirmed},
            {"mean_latency", std::to_string(mean_latency)},
            {"p50_latency", p50_latency},
            {"max_latency", max_latency},
            {"undone_txs", undone_txs},
            {"messages_sent", messages_sent},
            {"messages_dropped", messages_dropped}};
}

bool RunResult::passed() const
{
    if (!errors.empty() || !reorg_mismatches.empty() || !invalid_confirmed.empty() || !pow_failures.empty()) {
        return false;
    }
    return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.pass; });
}

std::string RunResult::trace_text() const
{
    std::string out;
    for (const auto& line : trace) {
        out += line;
        out += '\n';
    }
    return out;
}

RunResult run(const Scenario& scenario, const RunOptions& options)
{
    if (scenario.nodes.empty()) throw ScenarioError("nodes", "at least one node");
    return Runner(scenario, options).run();
}

AssertionResult designs_equivalent(const Scenario& scenario, std::uint64_t seed, RunResult* actions, RunResult* states)
{
    RunOptions o;
    o.seed = seed;
    o.record_trace = false;
    o.mirror = false;
    o.design = engine::Design::Actions;
    auto a = run(scenario, o);
    o.design = engine::Design::States;
    auto s = run(scenario, o);
    auto out = Runner::compare_designs(a, s);
    if (!a.passed() || !s.passed()) out.pass = false;
    if (actions) *actions = std::move(a);
    if (states) *states = std::move(s);
    return out;
}

double block_rate(const Scenario& scenario)
{
    double miss = 1.0;
    for (const auto& n : scenario.nodes) miss *= 1.0 - n.mining_rate;
    return 1.0 - miss;
}

double expected_latency(unsigned k, double p)
{
    return (k + 1) / p - 1.0;
}

} // namespace wfchain::sim
