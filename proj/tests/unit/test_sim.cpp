#include <doctest.h>

#include <wfchain/sim/generate.hpp>
#include <wfchain/sim/runner.hpp>

using namespace wfchain;
using namespace wfchain::sim;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(WFCHAIN_SOURCE_DIR) / "scenarios";

Scenario shipped(const std::string& name)
{
    return Scenario::load(kScenarios / (name + ".json"));
}

std::string scenario_error(const std::string& text)
{
    try {
        Scenario::from_json(Json::parse(text), kScenarios);
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return "no error";
}

std::vector<Json> trace_events(const RunResult& r, const std::string& event)
{
    std::vector<Json> out;
    for (const auto& line : r.trace) {
        auto j = Json::parse(line);
        if (j["event"] == event) out.push_back(std::move(j));
    }
    return out;
}

} // namespace

TEST_CASE("scenario: schema errors name the field")
{
    CHECK(scenario_error(R"({"nodes":[{"name":"n1"}]})").starts_with("$.seed"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1","colour":"red"}]})").starts_with("nodes[0].colour"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1","mining_rate":0.5}]})").starts_with("nodes[0].mining_rate"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1","mining_rate":"1.5"}]})").starts_with("nodes[0].mining_rate"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1"},{"name":"n1"}]})").starts_with("nodes[1].name"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1"}],"models":["models/seq.json"],
        "actions":[{"tick":1,"node":"n9","launch":{"model":"SEQ","case":"c"}}]})")
              .starts_with("actions[0].node"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1"}],
        "actions":[{"tick":1,"node":"n1","launch":{"model":"SEQ","case":"c"}}]})")
              .starts_with("actions[0].launch.model"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1"},{"name":"n2"}],
        "partitions":[{"from":5,"until":5,"groups":[["n1"]]}]})")
              .starts_with("partitions[0].until"));
    CHECK(scenario_error(R"({"seed":1,"nodes":[{"name":"n1"}],"assertions":["everything_fine"]})")
              .starts_with("assertions[0]"));
}

TEST_CASE("scenario: serialisation round trip and repeat expansion")
{
    const auto s = shipped("partitioned-five");
    CHECK(s.nodes.size() == 5);
    CHECK(s.edges.size() == 5); // ring
    CHECK(s.actions.size() == 6 * 3 + 3);
    CHECK(s.actions[1].case_id == "s-2");
    CHECK(s.actions[1].tick == 26);
    CHECK(s.nodes[0].mining_rate == doctest::Approx(0.03));
    const auto again = Scenario::from_json(s.to_json());
    CHECK(canonical_bytes(again.to_json()) == canonical_bytes(s.to_json()));
}

TEST_CASE("sim: identical scenario and seed give identical traces")
{
    const auto s = shipped("partitioned-five");
    const auto a = run(s);
    const auto b = run(s);
    CHECK(a.trace_text() == b.trace_text());
    CHECK(a.trace.size() > 100);
    RunOptions other;
    other.seed = s.seed + 1;
    CHECK(run(s, other).trace_text() != a.trace_text());
}

TEST_CASE("sim: SEQ happy path on two nodes")
{
    const auto r = run(shipped("seq-happy"));
    REQUIRE(r.passed());
    CHECK(r.quiescent);
    REQUIRE(r.finals.size() == 2);
    CHECK(r.finals[0].head == r.finals[1].head);
    for (const auto& f : r.finals) {
        const auto& c = f.case_states.at("order-1");
        CHECK(c["marking"] == Json{{"p2", 1}});
        CHECK(c["values"]["x"] == 7);
        CHECK(c["values"]["status"] == "shipped");
    }
    CHECK(r.metrics.confirmed == 4); // model, launch, A, B
    CHECK(r.pow_failures.empty());
    CHECK(r.blocks_checked >= r.finals[0].height);
}

TEST_CASE("sim: deferred-choice race")
{
    std::size_t with_reorg = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RunOptions o;
        o.seed = seed;
        const auto r = run(shipped("dc-race"), o);
        CAPTURE(seed);
        REQUIRE(r.passed());
        if (r.metrics.reorgs > 0) ++with_reorg;
        const auto& winner = r.assertions.back().evidence["winner"];
        CHECK((winner == "A" || winner == "B"));
        for (const auto& f : r.finals) CHECK(f.case_states["race"]["values"]["choice"] == winner);
    }
    CHECK(with_reorg > 0);
}

TEST_CASE("sim: a partitioned fork heals and returns side-branch transactions to the pool")
{
    const auto r = run(shipped("fork-heal"));
    REQUIRE(r.passed());
    bool returned = false;
    for (const auto& ev : trace_events(r, "Reorganized")) {
        if (!ev["data"]["returned"].empty()) returned = true;
    }
    CHECK(returned);
    CHECK(r.reorg_checks > 0);
    CHECK(r.reorg_mismatches.empty());
    for (const auto& f : r.finals) {
        CHECK(f.case_states.contains("left"));
        CHECK(f.case_states.contains("right"));
    }
}

TEST_CASE("sim: automated handler completes its item")
{
    const auto r = run(shipped("automated-audit"));
    REQUIRE(r.passed());
    CHECK(r.finals[0].case_states["expense-9"]["values"]["verdict"] == "approved");
    CHECK(!trace_events(r, "handler").empty());
}

TEST_CASE("sim: a scripted completion that never becomes possible is a scenario error")
{
    auto doc = Json::parse(R"({"seed":1,"nodes":[{"name":"n1","mining_rate":"0.2"}],"models":["models/seq.json"],
        "actions":[{"tick":1,"node":"n1","wait":50,"complete":{"case":"ghost","transition":"A"}}]})");
    const auto r = run(Scenario::from_json(doc, kScenarios));
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("ghost/A") != std::string::npos);
    CHECK_FALSE(r.passed());

    doc["actions"][0]["optional"] = true;
    CHECK(run(Scenario::from_json(doc, kScenarios)).errors.empty());
}

TEST_CASE("sim: metrics CSV columns line up")
{
    const auto r = run(shipped("seq-happy"));
    const auto header = Metrics::csv_header();
    const auto row = r.metrics.csv_row("seq-happy", 1, 2, true);
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}

TEST_CASE("sim: latency expectation of the per-tick mining process")
{
    CHECK(expected_latency(0, 0.1) == doctest::Approx(9.0));
    CHECK(expected_latency(6, 0.1) == doctest::Approx(69.0));
    Scenario s;
    s.nodes = {{"a", 2, 0.1, {}}, {"b", 2, 0.2, {}}, {"c", 2, 0.0, {}}};
    CHECK(block_rate(s) == doctest::Approx(1 - 0.9 * 0.8));

    // Independent estimate: draw the per-tick Bernoulli process directly.
    Rng rng(99);
    for (unsigned k : {0u, 2u, 6u}) {
        double total = 0;
        const int trials = 20000;
        for (int i = 0; i < trials; ++i) {
            unsigned blocks = 0;
            std::uint64_t t = 0;
            while (true) {
                if (rng.bernoulli(0.1) && ++blocks == k + 1) break;
                ++t;
            }
            total += static_cast<double>(t);
        }
        CHECK(total / trials == doctest::Approx(expected_latency(k, 0.1)).epsilon(0.03));
    }
}

TEST_CASE("generate: random scenarios stay within the suite's bounds")
{
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const auto s = Scenario::from_json(generate_scenario(seed));
        CAPTURE(seed);
        CHECK(s.nodes.size() >= 2);
        CHECK(s.nodes.size() <= 6);
        CHECK(s.latency.max <= 20);
        CHECK(s.partitions.size() <= 2);
        CHECK(s.design == (seed % 2 == 0 ? engine::Design::Actions : engine::Design::States));
        CHECK(std::any_of(s.nodes.begin(), s.nodes.end(), [](const auto& n) { return n.mining_rate > 0; }));
        CHECK(canonical_bytes(generate_scenario(seed)) == canonical_bytes(generate_scenario(seed)));
    }
}

TEST_CASE("generate: built-in models parse and their outputs satisfy the constraints")
{
    for (const std::string kind : {"SEQ", "DC", "AND"}) {
        const auto doc = builtin_model(kind, {"n1", "n2"});
        const auto m = petri::WorkflowModel::from_json(doc);
        CHECK(m.name() == kind);
    }
    CHECK_THROWS_AS(builtin_model("XOR", {"n1"}), std::invalid_argument);
    CHECK(builtin_outputs("SEQ", "A", 25)["x"] == 3);
}
