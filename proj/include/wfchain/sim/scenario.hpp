#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <wfchain/engine/engine.hpp>
#include <wfchain/node/config.hpp>
#include <wfchain/p2p/sim.hpp>

namespace wfchain::sim {

/// Invalid scenario document; the message starts with the field path.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& path, const std::string& problem) : std::runtime_error(path + ": " + problem) {}
};

struct NodeSpec {
    std::string name;
    unsigned confirmation_depth = 2;
    double mining_rate = 0.0; // probability of minting a block per tick
    std::map<std::string, node::HandlerSpec> handlers;
};

struct LinkSpec {
    std::string a;
    std::string b;
    p2p::Latency latency;
};

struct ActionSpec {
    enum class Kind { Launch, Complete, Retry };
    std::uint64_t tick = 0; // earliest tick
    std::string node;
    Kind kind = Kind::Launch;
    std::string model;      // launch
    std::string case_id;
    std::string transition; // complete / retry
    Json outputs = Json::object();
    std::uint64_t wait = 2000; // ticks to wait for the item or model
    bool optional = false;     // no scenario error when the wait runs out

    Json to_json() const;
};

struct AssertionSpec {
    std::string name;
    Json params = Json::object();
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 0;
    engine::Design design = engine::Design::Actions;
    unsigned difficulty = 8;
    std::vector<NodeSpec> nodes;
    std::vector<std::pair<std::string, std::string>> edges; // undirected
    p2p::Latency latency;
    std::vector<LinkSpec> links;
    std::vector<p2p::PartitionWindow> partitions;
    std::vector<Json> models;
    std::string installer; // node submitting the models at tick 0
    std::vector<ActionSpec> actions;
    std::uint64_t max_ticks = 20000;
    bool quiescence = true;
    std::vector<AssertionSpec> assertions;

    const NodeSpec* find_node(const std::string& name) const;

    /// Relative model file references resolve against `base_dir`.
    static Scenario from_json(const Json& doc, const std::filesystem::path& base_dir = {});
    static Scenario load(const std::filesystem::path& path);
    Json to_json() const;
};

} // namespace wfchain::sim
