#include <wfchain/p2p/sim.hpp>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace wfchain::p2p {

namespace {

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b)
{
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

} // namespace

SimNetwork::SimNetwork(std::uint64_t seed, Latency default_latency) : rng_(seed), default_(default_latency)
{
    if (default_.max < default_.min) throw std::invalid_argument("latency max below min");
}

void SimNetwork::add_node(const std::string& name)
{
    if (std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end()) {
        throw std::invalid_argument("duplicate sim node '" + name + "'");
    }
    nodes_.push_back(name);
}

void SimNetwork::set_link_latency(const std::string& a, const std::string& b, Latency latency)
{
    if (latency.max < latency.min) throw std::invalid_argument("latency max below min");
    links_[ordered(a, b)] = latency;
}

void SimNetwork::add_partition(PartitionWindow window)
{
    partitions_.push_back(std::move(window));
}

Latency SimNetwork::latency(const std::string& a, const std::string& b) const
{
    const auto it = links_.find(ordered(a, b));
    return it == links_.end() ? default_ : it->second;
}

int SimNetwork::group_of(const PartitionWindow& w, const std::string& node) const
{
    for (std::size_t i = 0; i < w.groups.size(); ++i) {
        if (w.groups[i].contains(node)) return static_cast<int>(i);
    }
    return -1;
}

bool SimNetwork::reachable(const std::string& a, const std::string& b, std::uint64_t tick) const
{
    for (const auto& w : partitions_) {
        if (tick < w.from || tick >= w.until) continue;
        if (group_of(w, a) != group_of(w, b)) return false;
    }
    return true;
}

std::vector<std::pair<std::string, std::string>> SimNetwork::healed_at(std::uint64_t tick) const
{
    std::vector<std::pair<std::string, std::string>> out;
    if (tick == 0) return out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
            if (!reachable(nodes_[i], nodes_[j], tick - 1) && reachable(nodes_[i], nodes_[j], tick)) {
                out.push_back(ordered(nodes_[i], nodes_[j]));
            }
        }
    }
    return out;
}

void SimNetwork::send(std::uint64_t now, const std::string& from, const std::string& to, std::string frame)
{
    ++stats_.sent;
    stats_.bytes += frame.size();
    const auto lat = latency(from, to);
    const auto delay = lat.min + (lat.max > lat.min ? rng_.below(lat.max - lat.min + 1) : 0);
    if (!reachable(from, to, now)) {
        ++stats_.dropped;
        return;
    }
    // Links are FIFO, like the TCP transport: a frame never overtakes an earlier one.
    auto& last = last_arrival_[{from, to}];
    const auto arrival = std::max(now + delay, last);
    last = arrival;
    queue_.emplace(std::pair{arrival, seq_++}, Delivery{arrival, from, to, std::move(frame)});
}

std::vector<Delivery> SimNetwork::due(std::uint64_t tick)
{
    std::vector<Delivery> out;
    while (!queue_.empty() && queue_.begin()->first.first <= tick) {
        auto node = queue_.extract(queue_.begin());
        if (!reachable(node.mapped().from, node.mapped().to, node.mapped().tick)) {
            ++stats_.dropped;
            continue;
        }
        ++stats_.delivered;
        out.push_back(std::move(node.mapped()));
    }
    return out;
}

std::uint64_t SimNetwork::next_arrival() const
{
    return queue_.empty() ? std::numeric_limits<std::uint64_t>::max() : queue_.begin()->first.first;
}

} // namespace wfchain::p2p
