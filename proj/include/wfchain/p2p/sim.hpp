#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <wfchain/core/random.hpp>

namespace wfchain::p2p {

/// Uniform integer latency in ticks, inclusive bounds.
struct Latency {
    std::uint64_t min = 0;
    std::uint64_t max = 0;
};

/// While from <= tick < until, nodes in different groups cannot exchange
/// messages. Nodes listed in no group form one further group together.
struct PartitionWindow {
    std::uint64_t from = 0;
    std::uint64_t until = 0;
    std::vector<std::set<std::string>> groups;
};

struct Delivery {
    std::uint64_t tick = 0;
    std::string from;
    std::string to;
    std::string frame;
};

/// Deterministic in-process transport. Frames sent at tick t arrive at
/// t + latency drawn from the link's distribution, but never before an
/// earlier frame on the same directed link; frames that cross an active
/// partition, at sending or at arrival, are lost.
class SimNetwork {
public:
    explicit SimNetwork(std::uint64_t seed, Latency default_latency = {});

    void add_node(const std::string& name);
    const std::vector<std::string>& nodes() const { return nodes_; }
    void set_link_latency(const std::string& a, const std::string& b, Latency latency);
    void add_partition(PartitionWindow window);

    bool reachable(const std::string& a, const std::string& b, std::uint64_t tick) const;
    /// Pairs (a < b) that are unreachable at tick - 1 and reachable at tick.
    std::vector<std::pair<std::string, std::string>> healed_at(std::uint64_t tick) const;

    void send(std::uint64_t now, const std::string& from, const std::string& to, std::string frame);
    /// Removes and returns, in (arrival, send order), every frame due by `tick`.
    std::vector<Delivery> due(std::uint64_t tick);

    std::size_t in_flight() const { return queue_.size(); }
    std::uint64_t next_arrival() const;

    struct Stats {
        std::uint64_t sent = 0;
        std::uint64_t delivered = 0;
        std::uint64_t dropped = 0;
        std::uint64_t bytes = 0;
    };
    const Stats& stats() const { return stats_; }

private:
    int group_of(const PartitionWindow& w, const std::string& node) const;
    Latency latency(const std::string& a, const std::string& b) const;

    Rng rng_;
    Latency default_;
    std::vector<std::string> nodes_;
    std::map<std::pair<std::string, std::string>, Latency> links_;
    std::vector<PartitionWindow> partitions_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, Delivery> queue_; // (arrival, seq)
    std::map<std::pair<std::string, std::string>, std::uint64_t> last_arrival_;
    std::uint64_t seq_ = 0;
    Stats stats_;
};

} // namespace wfchain::p2p
