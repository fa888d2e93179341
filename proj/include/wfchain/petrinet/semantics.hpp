#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <wfchain/petrinet/model.hpp>

namespace wfchain::petri {

class SemanticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transitions whose input multiset is covered by the marking, in model order.
std::vector<std::string> enabled_transitions(const WorkflowModel& model, const Marking& marking);
bool is_enabled(const Activity& activity, const Marking& marking);

/// Throws SemanticsError if the transition is not enabled.
Marking fire(const WorkflowModel& model, const Marking& marking, std::string_view transition);
/// Exact inverse of fire. Throws SemanticsError if the outputs are not present.
Marking unfire(const WorkflowModel& model, const Marking& marking, std::string_view transition);

struct ReachabilityLimits {
    std::size_t max_states = 100000;
    std::uint32_t max_tokens_per_place = 64;
};

enum class Reachability { Reachable, Unreachable, LimitExceeded };
std::string_view to_string(Reachability r);

/// Breadth-first search over firing sequences. Markings that would put more
/// than max_tokens_per_place tokens on a place are not explored; if the
/// target is not found and anything was cut off, the answer is LimitExceeded.
Reachability is_reachable(const WorkflowModel& model, const Marking& from, const Marking& to,
                          const ReachabilityLimits& limits = {});

enum class CaseStatus { Running, Finished, Deadlocked };
std::string_view to_string(CaseStatus s);

CaseStatus case_status(const WorkflowModel& model, const Marking& marking);

} // namespace wfchain::petri
