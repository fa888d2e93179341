#include <wfchain/sim/generate.hpp>

#include <algorithm>

#include <wfchain/core/random.hpp>

namespace wfchain::sim {

namespace {

Json transition(const std::string& name, const std::string& actor, Json in, Json out,
                std::vector<std::string> inputs = {}, std::vector<std::string> outputs = {},
                std::vector<std::string> constraints = {})
{
    return {{"name", name},   {"actor", actor},     {"in_arcs", std::move(in)}, {"out_arcs", std::move(out)},
            {"inputs", inputs}, {"outputs", outputs}, {"constraints", constraints}};
}

} // namespace

Json builtin_model(const std::string& kind, const std::vector<std::string>& actors)
{
    if (actors.empty()) throw std::invalid_argument("builtin_model: no actors");
    const auto actor = [&](std::size_t i) { return actors[i % actors.size()]; };
    if (kind == "SEQ") {
        return {{"name", "SEQ"},
                {"places", {"p0", "p1", "p2"}},
                {"variables", {{{"name", "x"}, {"type", "integer"}}, {{"name", "status"}, {"type", "string"}}}},
                {"transitions",
                 {transition("A", actor(0), {{"p0", 1}}, {{"p1", 1}}, {"x"}, {"x"}, {"x <= 10"}),
                  transition("B", actor(1), {{"p1", 1}}, {{"p2", 1}}, {"x"}, {"status"})}},
                {"initial_marking", {{"p0", 1}}},
                {"final_markings", {{{"p2", 1}}}}};
    }
    if (kind == "DC") {
        return {{"name", "DC"},
                {"places", {"p0", "pA", "pB"}},
                {"variables", {{{"name", "choice"}, {"type", "string"}}}},
                {"transitions",
                 {transition("A", actor(0), {{"p0", 1}}, {{"pA", 1}}, {}, {"choice"}),
                  transition("B", actor(1), {{"p0", 1}}, {{"pB", 1}}, {}, {"choice"})}},
                {"initial_marking", {{"p0", 1}}},
                {"final_markings", {{{"pA", 1}}, {{"pB", 1}}}}};
    }
    if (kind == "AND") {
        return {{"name", "AND"},
                {"places", {"start", "l0", "r0", "l1", "r1", "end"}},
                {"variables", {{{"name", "amount"}, {"type", "decimal"}}, {{"name", "ok"}, {"type", "boolean"}}}},
                {"transitions",
                 {transition("Split", actor(0), {{"start", 1}}, {{"l0", 1}, {"r0", 1}}),
                  transition("Left", actor(1), {{"l0", 1}}, {{"l1", 1}}, {}, {"amount"}, {"amount >= 0"}),
                  transition("Right", actor(2), {{"r0", 1}}, {{"r1", 1}}, {}, {"ok"}),
                  transition("Join", actor(3), {{"l1", 1}, {"r1", 1}}, {{"end", 1}}, {"amount", "ok"})}},
                {"initial_marking", {{"start", 1}}},
                {"final_markings", {{{"end", 1}}}}};
    }
    throw std::invalid_argument("builtin_model: unknown kind " + kind);
}

Json builtin_outputs(const std::string& kind, const std::string& t, std::uint64_t salt)
{
    if (kind == "SEQ") {
        if (t == "A") return {{"x", static_cast<std::int64_t>(salt % 11)}};
        return {{"status", "done-" + std::to_string(salt % 7)}};
    }
    if (kind == "DC") return {{"choice", t}};
    if (t == "Left") return {{"amount", std::to_string(salt % 1000) + ".25"}};
    if (t == "Right") return {{"ok", salt % 2 == 0}};
    return Json::object();
}

Json generate_scenario(std::uint64_t seed, const GenerateOptions& o)
{
    Rng rng(seed ^ 0x67656e6572617465ULL);
    const auto n = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(o.min_nodes),
                                                         static_cast<std::int64_t>(o.max_nodes)));
    std::vector<std::string> names;
    for (std::size_t i = 1; i <= n; ++i) names.push_back("n" + std::to_string(i));

    Json nodes = Json::array();
    bool any_miner = false;
    for (std::size_t i = 0; i < n; ++i) {
        Json node = {{"name", names[i]}, {"confirmation_depth", rng.below(4)}};
        const bool miner = rng.bernoulli(0.7) || (i + 1 == n && !any_miner);
        if (miner) {
            any_miner = true;
            node["mining_rate"] = "0.0" + std::to_string(1 + rng.below(4));
        }
        nodes.push_back(std::move(node));
    }

    static const char* kTopologies[] = {"mesh", "line", "ring"};
    const auto lat_min = rng.below(o.max_latency / 2 + 1);
    const auto lat_max = lat_min + rng.below(o.max_latency - lat_min + 1);

    Json partitions = Json::array();
    if (n >= 2) {
        const auto count = rng.below(o.max_partitions + 1);
        std::uint64_t from = 20;
        for (std::uint64_t p = 0; p < count; ++p) {
            from += 10 + rng.below(250);
            const auto until = from + 10 + rng.below(100);
            auto shuffled = names;
            for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
            const auto cut = 1 + rng.below(n - 1);
            Json left(std::vector<std::string>(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(cut)));
            Json right(std::vector<std::string>(shuffled.begin() + static_cast<std::ptrdiff_t>(cut), shuffled.end()));
            partitions.push_back({{"from", from}, {"until", until}, {"groups", Json::array({left, right})}});
            from = until;
        }
    }

    const auto pick = [&] { return names[rng.below(n)]; };
    std::map<std::string, std::vector<std::string>> actors;
    Json models = Json::array();
    for (const std::string kind : {"SEQ", "DC", "AND"}) {
        const std::size_t count = kind == "AND" ? 4 : 2;
        for (std::size_t i = 0; i < count; ++i) actors[kind].push_back(pick());
        if (kind == "DC" && n >= 2) {
            while (actors[kind][1] == actors[kind][0]) actors[kind][1] = pick();
        }
        models.push_back(builtin_model(kind, actors[kind]));
    }

    static const std::map<std::string, std::vector<std::string>> kSteps = {
        {"SEQ", {"A", "B"}}, {"DC", {"A", "B"}}, {"AND", {"Split", "Left", "Right", "Join"}}};
    Json actions = Json::array();
    Json assertions = {"converged_heads", "no_invalid_confirmed"};
    const auto cases = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(o.min_cases),
                                                             static_cast<std::int64_t>(o.max_cases)));
    std::uint64_t tick = 1;
    for (std::size_t c = 1; c <= cases; ++c) {
        static const char* kKinds[] = {"SEQ", "DC", "AND"};
        const std::string kind = kKinds[rng.below(3)];
        const auto case_id = "c" + std::to_string(c);
        tick += rng.below(60);
        actions.push_back({{"tick", tick}, {"node", pick()}, {"launch", {{"model", kind}, {"case", case_id}}}});
        const auto& steps = kSteps.at(kind);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            Json a = {{"tick", tick},
                      {"node", actors[kind][i]},
                      {"wait", 3000},
                      {"complete",
                       {{"case", case_id}, {"transition", steps[i]}, {"outputs", builtin_outputs(kind, steps[i], rng.next())}}}};
            if (kind == "DC") a["optional"] = true;
            actions.push_back(a);
            if (kind != "DC") {
                // Concurrent completions can conflict and be dropped; the item is then worklisted again.
                a["retry"] = a["complete"];
                a.erase("complete");
                actions.push_back(a);
                actions.push_back(a);
            }
        }
        if (kind == "DC") {
            assertions.push_back({{"deferred_choice_exclusive", {{"case", case_id}, {"transitions", Json::array({"A", "B"})}}}});
        }
    }

    return {{"name", "random-" + std::to_string(seed)},
            {"seed", seed},
            {"design", seed % 2 == 0 ? "actions" : "states"},
            {"nodes", nodes},
            {"topology", kTopologies[rng.below(3)]},
            {"latency", {{"min", lat_min}, {"max", lat_max}}},
            {"partitions", partitions},
            {"models", models},
            {"installer", names.front()},
            {"actions", actions},
            {"stop", {{"max_ticks", 8000}}},
            {"assertions", assertions}};
}

} // namespace wfchain::sim
