#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <wfchain/sim/scenario.hpp>

namespace wfchain::sim {

/// Built-in models: "SEQ" (A then B), "DC" (A or B on one token) and "AND"
/// (Split, Left || Right, Join). Transitions are assigned to the given actors
/// in order, cycling when fewer actors than transitions are given.
Json builtin_model(const std::string& kind, const std::vector<std::string>& actors);

/// Output values that satisfy the built-in model's constraints.
Json builtin_outputs(const std::string& kind, const std::string& transition, std::uint64_t salt);

struct GenerateOptions {
    std::size_t min_nodes = 2;
    std::size_t max_nodes = 6;
    std::uint64_t max_latency = 20;
    std::size_t max_partitions = 2;
    std::size_t min_cases = 2;
    std::size_t max_cases = 5;
};

/// Random but reproducible scenario. The engine design follows the seed's
/// parity, so a run of consecutive seeds covers both designs.
Json generate_scenario(std::uint64_t seed, const GenerateOptions& options = {});

} // namespace wfchain::sim
