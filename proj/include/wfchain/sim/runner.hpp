#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <wfchain/sim/scenario.hpp>

namespace wfchain::sim {

struct Metrics {
    std::uint64_t ticks = 0;
    std::uint64_t blocks_mined = 0;
    std::uint64_t forks = 0;  // heights at which more than one block was minted
    std::uint64_t reorgs = 0; // Reorganized events over all nodes
    std::uint64_t transactions = 0;
    std::uint64_t confirmed = 0;
    double mean_latency = 0; // submit -> confirmed, ticks
    std::uint64_t p50_latency = 0;
    std::uint64_t max_latency = 0;
    std::uint64_t undone_txs = 0; // distinct transactions undone by a reorganisation
    std::uint64_t messages_sent = 0;
    std::uint64_t messages_dropped = 0;

    static std::string csv_header();
    std::string csv_row(const std::string& scenario, std::uint64_t seed, std::size_t nodes, bool quiescent) const;
    Json to_json() const;
};

struct NodeFinal {
    std::string name;
    unsigned confirmation_depth = 0;
    std::uint64_t height = 0;
    Digest head;
    Digest state_digest;   // engine at head
    Digest visible_digest; // engine at head - K
    Json case_states;      // visible cases: marking and values
};

struct AssertionResult {
    std::string name;
    bool pass = false;
    Json evidence;
};

/// Submit-to-confirm measurement of one locally submitted transaction.
struct LatencySample {
    std::string node;
    std::string tx;
    std::uint64_t submitted = 0;
    std::uint64_t confirmed = 0;
};

struct RunResult {
    std::string scenario;
    std::uint64_t seed = 0;
    engine::Design design = engine::Design::Actions;
    std::vector<std::string> trace; // one canonical JSON document per line
    std::vector<NodeFinal> finals;
    Metrics metrics;
    std::vector<LatencySample> latencies;
    bool quiescent = false;
    std::vector<std::string> errors; // scenario bugs: scripted actions that could not run

    // Checks made during the run.
    std::uint64_t reorg_checks = 0;
    std::vector<std::string> reorg_mismatches;
    std::vector<std::string> invalid_confirmed;
    std::uint64_t blocks_checked = 0;
    std::vector<std::string> pow_failures;

    std::vector<AssertionResult> assertions;

    bool passed() const;
    std::string trace_text() const;
};

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<engine::Design> design;
    bool record_trace = true;
    bool mirror = true; // evaluate designs_equivalent by running the other design too
};

RunResult run(const Scenario& scenario, const RunOptions& options = {});

/// Runs the scenario under both engine designs and compares the confirmed
/// case states node by node.
AssertionResult designs_equivalent(const Scenario& scenario, std::uint64_t seed, RunResult* actions = nullptr,
                                   RunResult* states = nullptr);

/// Probability that at least one node mints a block in a tick.
double block_rate(const Scenario& scenario);
/// Exact mean submit->confirm latency in ticks when a block is minted with
/// probability p per tick, the transaction can make the block of its own
/// tick, and confirmation needs K blocks on top: (K+1)/p - 1.
double expected_latency(unsigned k, double p);

} // namespace wfchain::sim
