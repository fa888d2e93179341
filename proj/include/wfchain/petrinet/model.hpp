#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <wfchain/core/canonical.hpp>
#include <wfchain/petrinet/constraint.hpp>
#include <wfchain/petrinet/value.hpp>

namespace wfchain::petri {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Place id -> token count. Zero counts are never stored, so two markings
/// compare equal exactly when they put the same tokens on the same places.
using Marking = std::map<std::string, std::uint32_t>;

Marking marking_from_json(const Json& json);
Json marking_to_json(const Marking& marking);
std::string marking_to_string(const Marking& marking);

struct Variable {
    std::string name;
    VarType type = VarType::Integer;
};

/// One Petri-net transition together with its workflow annotations.
struct Activity {
    std::string name;
    std::string actor;
    std::optional<std::string> role;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    Marking in_arcs;
    Marking out_arcs;
    std::vector<Constraint> constraints;
    std::optional<std::string> handler;
};

class WorkflowModel {
public:
    /// Parses and validates a model document. Throws ModelError naming the
    /// offending field.
    static WorkflowModel from_json(const Json& doc);
    Json to_json() const;

    const std::string& name() const { return name_; }
    const std::set<std::string>& places() const { return places_; }
    const std::vector<Activity>& transitions() const { return transitions_; }
    const std::vector<Variable>& variables() const { return variables_; }
    const Marking& initial_marking() const { return initial_; }
    const std::vector<Marking>& final_markings() const { return finals_; }

    const Activity* find(std::string_view transition) const;
    const Activity& at(std::string_view transition) const;
    std::optional<VarType> variable_type(std::string_view name) const;
    const std::map<std::string, VarType>& variable_types() const { return types_; }

    /// Every constraint of every activity; used where constraints must hold
    /// for the whole case state.
    std::vector<Constraint> all_constraints() const;

    Values default_values() const;
    /// Decodes a full value map; throws ValueError on missing, extra or
    /// ill-typed entries.
    Values values_from_json(const Json& json) const;
    /// Decodes a subset of variables (e.g. an activity's outputs).
    Values partial_values_from_json(const Json& json, const std::vector<std::string>& allowed) const;

private:
    std::string name_;
    std::set<std::string> places_;
    std::vector<Activity> transitions_;
    std::vector<Variable> variables_;
    std::map<std::string, VarType> types_;
    Marking initial_;
    std::vector<Marking> finals_;
};

using ModelPtr = std::shared_ptr<const WorkflowModel>;

/// Control-flow and data state of one case.
struct CaseState {
    std::string case_id;
    std::string model;
    Marking marking;
    Values values;

    Json to_json() const;
    bool operator==(const CaseState&) const = default;
};

} // namespace wfchain::petri
