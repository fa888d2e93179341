#include <wfchain/petrinet/semantics.hpp>

#include <algorithm>
#include <deque>
#include <set>

namespace wfchain::petri {

namespace {

bool covers(const Marking& marking, const Marking& required)
{
    for (const auto& [place, need] : required) {
        const auto it = marking.find(place);
        if (it == marking.end() || it->second < need) return false;
    }
    return true;
}

Marking apply(Marking marking, const Marking& remove, const Marking& add)
{
    for (const auto& [place, n] : remove) {
        auto it = marking.find(place);
        it->second -= n;
        if (it->second == 0) marking.erase(it);
    }
    for (const auto& [place, n] : add) marking[place] += n;
    return marking;
}

} // namespace

bool is_enabled(const Activity& activity, const Marking& marking)
{
    return covers(marking, activity.in_arcs);
}

std::vector<std::string> enabled_transitions(const WorkflowModel& model, const Marking& marking)
{
    std::vector<std::string> out;
    for (const auto& a : model.transitions()) {
        if (is_enabled(a, marking)) out.push_back(a.name);
    }
    return out;
}

Marking fire(const WorkflowModel& model, const Marking& marking, std::string_view transition)
{
    const auto* a = model.find(transition);
    if (a == nullptr) throw SemanticsError("unknown transition '" + std::string(transition) + "'");
    if (!is_enabled(*a, marking)) {
        throw SemanticsError("transition '" + a->name + "' is not enabled in " + marking_to_string(marking));
    }
    return apply(marking, a->in_arcs, a->out_arcs);
}

Marking unfire(const WorkflowModel& model, const Marking& marking, std::string_view transition)
{
    const auto* a = model.find(transition);
    if (a == nullptr) throw SemanticsError("unknown transition '" + std::string(transition) + "'");
    if (!covers(marking, a->out_arcs)) {
        throw SemanticsError("transition '" + a->name + "' cannot be unfired from " + marking_to_string(marking));
    }
    return apply(marking, a->out_arcs, a->in_arcs);
}

std::string_view to_string(Reachability r)
{
    switch (r) {
    case Reachability::Reachable: return "Reachable";
    case Reachability::Unreachable: return "Unreachable";
    case Reachability::LimitExceeded: return "LimitExceeded";
    }
    return "?";
}

Reachability is_reachable(const WorkflowModel& model, const Marking& from, const Marking& to,
                          const ReachabilityLimits& limits)
{
    if (from == to) return Reachability::Reachable;

    std::set<Marking> seen{from};
    std::deque<Marking> frontier{from};
    bool truncated = false;
    while (!frontier.empty()) {
        const Marking current = std::move(frontier.front());
        frontier.pop_front();
        for (const auto& a : model.transitions()) {
            if (!is_enabled(a, current)) continue;
            Marking next = apply(current, a.in_arcs, a.out_arcs);
            if (std::any_of(next.begin(), next.end(),
                            [&](const auto& e) { return e.second > limits.max_tokens_per_place; })) {
                truncated = true;
                continue;
            }
            if (next == to) return Reachability::Reachable;
            if (seen.contains(next)) continue;
            if (seen.size() >= limits.max_states) return Reachability::LimitExceeded;
            seen.insert(next);
            frontier.push_back(std::move(next));
        }
    }
    return truncated ? Reachability::LimitExceeded : Reachability::Unreachable;
}

std::string_view to_string(CaseStatus s)
{
    switch (s) {
    case CaseStatus::Running: return "Running";
    case CaseStatus::Finished: return "Finished";
    case CaseStatus::Deadlocked: return "Deadlocked";
    }
    return "?";
}

CaseStatus case_status(const WorkflowModel& model, const Marking& marking)
{
    const auto& finals = model.final_markings();
    if (std::find(finals.begin(), finals.end(), marking) != finals.end()) return CaseStatus::Finished;
    for (const auto& a : model.transitions()) {
        if (is_enabled(a, marking)) return CaseStatus::Running;
    }
    return CaseStatus::Deadlocked;
}

} // namespace wfchain::petri
