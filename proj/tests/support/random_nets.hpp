#pragma once

#include <map>
#include <string>

#include <wfchain/core/canonical.hpp>
#include <wfchain/core/random.hpp>

#include "reachability_oracle.hpp"

namespace wfchain::testing {

struct RandomNet {
    Json model;
    OracleNet oracle;
    std::map<std::string, std::uint32_t> initial;
};

using PlaceCounts = std::map<std::string, std::uint32_t>;

/// Random plain net with up to `max_places` places, `max_transitions`
/// transitions and at most `max_tokens` tokens in the initial marking.
inline RandomNet random_net(Rng& rng, std::size_t max_places = 10, std::size_t max_transitions = 8,
                            std::uint32_t max_tokens = 3)
{
    RandomNet net;
    const auto n_places = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_places)));
    const auto n_trans = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_transitions)));
    for (std::size_t i = 0; i < n_places; ++i) net.oracle.places.push_back("p" + std::to_string(i));

    const auto random_bag = [&](std::int64_t max_arcs) {
        PlaceCounts bag;
        const auto arcs = rng.between(0, max_arcs);
        for (std::int64_t k = 0; k < arcs; ++k) {
            bag[net.oracle.places[rng.below(n_places)]] += 1;
        }
        return bag;
    };
    const auto to_json = [](const PlaceCounts& bag) {
        Json out = Json::object();
        for (const auto& [p, n] : bag) out[p] = n;
        return out;
    };

    Json transitions = Json::array();
    for (std::size_t t = 0; t < n_trans; ++t) {
        PlaceCounts pre = random_bag(2);
        if (pre.empty()) pre[net.oracle.places[rng.below(n_places)]] = 1;
        // Mostly token-conserving or consuming nets, with some generators.
        PlaceCounts post = random_bag(rng.bernoulli(0.8) ? 2 : 3);
        net.oracle.pre.push_back(pre);
        net.oracle.post.push_back(post);
        transitions.push_back({{"name", "t" + std::to_string(t)},
                               {"actor", "n1"},
                               {"in_arcs", to_json(pre)},
                               {"out_arcs", to_json(post)}});
    }
    const auto tokens = rng.between(1, max_tokens);
    for (std::int64_t k = 0; k < tokens; ++k) net.initial[net.oracle.places[rng.below(n_places)]] += 1;

    net.model = {{"name", "R"},
                 {"places", net.oracle.places},
                 {"transitions", transitions},
                 {"initial_marking", to_json(net.initial)},
                 {"final_markings", Json::array()}};
    return net;
}

inline PlaceCounts random_marking(Rng& rng, const RandomNet& net, std::uint32_t max_tokens = 3)
{
    PlaceCounts m;
    const auto tokens = rng.between(0, max_tokens);
    for (std::int64_t k = 0; k < tokens; ++k) {
        m[net.oracle.places[rng.below(net.oracle.places.size())]] += 1;
    }
    return m;
}

} // namespace wfchain::testing
