#pragma once

// Independent reachability oracle: exhaustive fixed-point enumeration of the
// bounded marking space, written without touching the library's BFS.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wfchain::testing {

struct OracleNet {
    std::vector<std::string> places;
    // per transition: token delta requirements
    std::vector<std::map<std::string, std::uint32_t>> pre;
    std::vector<std::map<std::string, std::uint32_t>> post;
};

enum class OracleAnswer { Reachable, Unreachable, Indeterminate };

using Vec = std::vector<std::uint32_t>;

inline OracleAnswer oracle_reachable(const OracleNet& net, const std::map<std::string, std::uint32_t>& from,
                                     const std::map<std::string, std::uint32_t>& to, std::uint32_t cap)
{
    const auto index_of = [&](const std::string& p) {
        for (std::size_t i = 0; i < net.places.size(); ++i) {
            if (net.places[i] == p) return i;
        }
        return net.places.size();
    };
    const auto to_vec = [&](const std::map<std::string, std::uint32_t>& m) {
        Vec v(net.places.size(), 0);
        for (const auto& [p, n] : m) v[index_of(p)] += n;
        return v;
    };
    const Vec start = to_vec(from);
    const Vec goal = to_vec(to);
    if (start == goal) return OracleAnswer::Reachable;

    std::set<Vec> known{start};
    bool overflow = false;
    bool grew = true;
    while (grew) {
        grew = false;
        const std::set<Vec> snapshot = known;
        for (const auto& m : snapshot) {
            for (std::size_t t = 0; t < net.pre.size(); ++t) {
                Vec next = m;
                bool ok = true;
                for (const auto& [p, n] : net.pre[t]) {
                    auto& slot = next[index_of(p)];
                    if (slot < n) {
                        ok = false;
                        break;
                    }
                    slot -= n;
                }
                if (!ok) continue;
                bool over = false;
                for (const auto& [p, n] : net.post[t]) {
                    auto& slot = next[index_of(p)];
                    slot += n;
                    over = over || slot > cap;
                }
                if (over) {
                    overflow = true;
                    continue;
                }
                if (known.insert(next).second) grew = true;
            }
        }
    }
    if (known.contains(goal)) return OracleAnswer::Reachable;
    return overflow ? OracleAnswer::Indeterminate : OracleAnswer::Unreachable;
}

} // namespace wfchain::testing
