#pragma once

// Random but valid workflow activity: model installs, case launches and
// completions with random outputs, filtered through the engine's own
// validation against the transactions already chosen.

#include <string>
#include <vector>

#include "harness.hpp"

namespace wfchain::testing {

inline Json loop_model(const std::string& a = "n1", const std::string& b = "n2")
{
    return Json::parse(R"({
      "name": "LOOP",
      "places": ["idle", "busy"],
      "variables": [{"name": "count", "type": "integer"}, {"name": "note", "type": "string"}],
      "transitions": [
        {"name": "Start", "actor": ")" + a + R"(", "outputs": ["count"], "in_arcs": {"idle": 1}, "out_arcs": {"busy": 1},
         "constraints": ["count >= 0"]},
        {"name": "Stop", "actor": ")" + b + R"(", "inputs": ["count"], "outputs": ["note"],
         "in_arcs": {"busy": 1}, "out_arcs": {"idle": 1}}
      ],
      "initial_marking": {"idle": 1},
      "final_markings": []
    })");
}

inline std::vector<Json> workload_models()
{
    return {seq_model(), dc_model(), and_model(), loop_model()};
}

inline Json random_value(Rng& rng, petri::VarType type)
{
    switch (type) {
    case petri::VarType::Integer: return rng.between(-2, 14);
    case petri::VarType::Decimal:
        return std::to_string(rng.between(-3, 30)) + "." + std::to_string(rng.between(0, 99));
    case petri::VarType::String: {
        static const char* words[] = {"open", "closed", "ok", "", "caf\xc3\xa9"};
        return words[rng.below(5)];
    }
    case petri::VarType::Boolean: return rng.bernoulli(0.5);
    }
    return nullptr;
}

/// One random candidate transaction given the engine state plus `pending`.
inline std::optional<chain::Transaction> random_candidate(Rng& rng, const engine::WorkflowEngine& e,
                                                          std::span<const chain::Transaction> pending,
                                                          std::size_t& case_counter)
{
    const auto models = workload_models();
    const auto roll = rng.below(100);
    if (roll < 5 || e.models().empty()) {
        return sign("n1", e.draft_model_update(models[rng.below(models.size())]));
    }
    const auto cases = e.cases();
    if (roll < 25 || cases.empty()) {
        const auto ms = e.models();
        const auto& m = ms[rng.below(ms.size())];
        auto d = e.draft_launch(m->name(), "case-" + std::to_string(++case_counter), pending);
        if (!d.body) return std::nullopt;
        return sign(rng.bernoulli(0.5) ? "n1" : "n2", *d.body);
    }
    const auto& c = cases[rng.below(cases.size())];
    const auto& acts = c.model->transitions();
    const auto& act = acts[rng.below(acts.size())];
    Json outputs = Json::object();
    for (const auto& o : act.outputs) {
        if (rng.bernoulli(0.9)) outputs[o] = random_value(rng, *c.model->variable_type(o));
    }
    auto d = e.draft_completion(c.state.case_id, act.name, outputs, pending);
    if (!d.body) return std::nullopt;
    return sign(act.actor, *d.body);
}

/// A block of up to `max_txs` transactions, each valid after its predecessors.
inline chain::Block random_valid_block(Rng& rng, engine::WorkflowEngine& e, std::size_t max_txs,
                                       std::size_t& case_counter, std::uint64_t height = 1)
{
    chain::Block b;
    b.height = height;
    b.miner = "n1";
    const auto target = rng.below(max_txs + 1);
    for (std::size_t attempt = 0; attempt < target * 4 && b.transactions.size() < target; ++attempt) {
        auto tx = random_candidate(rng, e, b.transactions, case_counter);
        if (tx && e.validate(*tx, b.transactions)) b.transactions.push_back(std::move(*tx));
    }
    b.seal();
    return b;
}

} // namespace wfchain::testing
