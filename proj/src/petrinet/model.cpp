#include <wfchain/petrinet/model.hpp>

#include <algorithm>
#include <sstream>

namespace wfchain::petri {

namespace {

const Json& field(const Json& obj, const std::string& key, const std::string& where)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw ModelError(where + "/" + key + ": missing");
    }
    return obj.at(key);
}

std::string string_field(const Json& obj, const std::string& key, const std::string& where)
{
    const auto& v = field(obj, key, where);
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw ModelError(where + "/" + key + ": expected a non-empty string");
    }
    return v.get<std::string>();
}

std::vector<std::string> string_list(const Json& obj, const std::string& key, const std::string& where)
{
    std::vector<std::string> out;
    if (!obj.contains(key)) return out;
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ModelError(where + "/" + key + ": expected a list");
    for (const auto& item : v) {
        if (!item.is_string()) throw ModelError(where + "/" + key + ": expected strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

Marking checked_marking(const Json& json, const std::set<std::string>& places, const std::string& where)
{
    Marking m;
    try {
        m = marking_from_json(json);
    } catch (const ModelError& e) {
        throw ModelError(where + ": " + e.what());
    }
    for (const auto& [place, count] : m) {
        if (!places.contains(place)) throw ModelError(where + ": undeclared place '" + place + "'");
    }
    return m;
}

} // namespace

Marking marking_from_json(const Json& json)
{
    if (!json.is_object()) throw ModelError("marking must be an object of place -> count");
    Marking m;
    for (const auto& [place, count] : json.items()) {
        if (!count.is_number_integer() || count.get<std::int64_t>() < 0 || count.get<std::int64_t>() > 0xffffffffLL) {
            throw ModelError("token count for '" + place + "' must be a non-negative integer");
        }
        if (const auto n = count.get<std::uint32_t>(); n > 0) m[place] = n;
    }
    return m;
}

Json marking_to_json(const Marking& marking)
{
    Json out = Json::object();
    for (const auto& [place, count] : marking) {
        if (count > 0) out[place] = count;
    }
    return out;
}

std::string marking_to_string(const Marking& marking)
{
    std::ostringstream out;
    out << '{';
    bool first = true;
    for (const auto& [place, count] : marking) {
        if (!first) out << ", ";
        out << place << ':' << count;
        first = false;
    }
    out << '}';
    return out.str();
}

WorkflowModel WorkflowModel::from_json(const Json& doc)
{
    if (!doc.is_object()) throw ModelError("model document must be an object");
    WorkflowModel m;
    m.name_ = string_field(doc, "name", "");

    for (const auto& p : string_list(doc, "places", "")) {
        if (!m.places_.insert(p).second) throw ModelError("/places: duplicate place '" + p + "'");
    }
    if (doc.contains("variables")) {
        const auto& vars = doc.at("variables");
        if (!vars.is_array()) throw ModelError("/variables: expected a list");
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const auto where = "/variables/" + std::to_string(i);
            Variable v;
            v.name = string_field(vars[i], "name", where);
            try {
                v.type = var_type_from_string(string_field(vars[i], "type", where));
            } catch (const ValueError& e) {
                throw ModelError(where + "/type: " + e.what());
            }
            if (!m.types_.emplace(v.name, v.type).second) {
                throw ModelError(where + ": duplicate variable '" + v.name + "'");
            }
            m.variables_.push_back(v);
        }
    }

    const auto& transitions = field(doc, "transitions", "");
    if (!transitions.is_array()) throw ModelError("/transitions: expected a list");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& t = transitions[i];
        const auto where = "/transitions/" + std::to_string(i);
        Activity a;
        a.name = string_field(t, "name", where);
        if (!seen.insert(a.name).second) throw ModelError(where + ": duplicate transition '" + a.name + "'");
        a.actor = string_field(t, "actor", where);
        if (t.contains("role") && !t.at("role").is_null()) a.role = string_field(t, "role", where);
        if (t.contains("handler") && !t.at("handler").is_null()) a.handler = string_field(t, "handler", where);
        a.inputs = string_list(t, "inputs", where);
        a.outputs = string_list(t, "outputs", where);
        for (const auto& v : a.inputs) {
            if (!m.types_.contains(v)) throw ModelError(where + "/inputs: undeclared variable '" + v + "'");
        }
        for (const auto& v : a.outputs) {
            if (!m.types_.contains(v)) throw ModelError(where + "/outputs: undeclared variable '" + v + "'");
        }
        a.in_arcs = checked_marking(t.value("in_arcs", Json::object()), m.places_, where + "/in_arcs");
        a.out_arcs = checked_marking(t.value("out_arcs", Json::object()), m.places_, where + "/out_arcs");
        for (const auto& src : string_list(t, "constraints", where)) {
            try {
                auto c = Constraint::parse(src);
                c.typecheck(m.types_);
                a.constraints.push_back(std::move(c));
            } catch (const ConstraintError& e) {
                throw ModelError(where + "/constraints: " + e.what());
            }
        }
        m.transitions_.push_back(std::move(a));
    }

    m.initial_ = checked_marking(field(doc, "initial_marking", ""), m.places_, "/initial_marking");
    if (m.initial_.empty()) throw ModelError("/initial_marking: must not be empty");
    if (doc.contains("final_markings")) {
        const auto& finals = doc.at("final_markings");
        if (!finals.is_array()) throw ModelError("/final_markings: expected a list");
        for (std::size_t i = 0; i < finals.size(); ++i) {
            m.finals_.push_back(checked_marking(finals[i], m.places_, "/final_markings/" + std::to_string(i)));
        }
    }
    return m;
}

Json WorkflowModel::to_json() const
{
    Json doc = Json::object();
    doc["name"] = name_;
    doc["places"] = Json(std::vector<std::string>(places_.begin(), places_.end()));
    Json vars = Json::array();
    for (const auto& v : variables_) {
        vars.push_back({{"name", v.name}, {"type", to_string(v.type)}});
    }
    doc["variables"] = vars;
    Json ts = Json::array();
    for (const auto& a : transitions_) {
        Json t = {{"name", a.name},
                  {"actor", a.actor},
                  {"inputs", a.inputs},
                  {"outputs", a.outputs},
                  {"in_arcs", marking_to_json(a.in_arcs)},
                  {"out_arcs", marking_to_json(a.out_arcs)}};
        Json cs = Json::array();
        for (const auto& c : a.constraints) cs.push_back(c.source());
        t["constraints"] = cs;
        if (a.role) t["role"] = *a.role;
        if (a.handler) t["handler"] = *a.handler;
        ts.push_back(std::move(t));
    }
    doc["transitions"] = ts;
    doc["initial_marking"] = marking_to_json(initial_);
    Json finals = Json::array();
    for (const auto& f : finals_) finals.push_back(marking_to_json(f));
    doc["final_markings"] = finals;
    return doc;
}

const Activity* WorkflowModel::find(std::string_view transition) const
{
    for (const auto& a : transitions_) {
        if (a.name == transition) return &a;
    }
    return nullptr;
}

const Activity& WorkflowModel::at(std::string_view transition) const
{
    if (const auto* a = find(transition)) return *a;
    throw ModelError("unknown transition '" + std::string(transition) + "'");
}

std::optional<VarType> WorkflowModel::variable_type(std::string_view name) const
{
    const auto it = types_.find(std::string(name));
    if (it == types_.end()) return std::nullopt;
    return it->second;
}

std::vector<Constraint> WorkflowModel::all_constraints() const
{
    std::vector<Constraint> out;
    for (const auto& a : transitions_) {
        out.insert(out.end(), a.constraints.begin(), a.constraints.end());
    }
    return out;
}

Values WorkflowModel::default_values() const
{
    Values out;
    for (const auto& v : variables_) out[v.name] = default_value(v.type);
    return out;
}

Values WorkflowModel::values_from_json(const Json& json) const
{
    if (!json.is_object()) throw ValueError("values must be an object");
    Values out;
    for (const auto& v : variables_) {
        if (!json.contains(v.name)) throw ValueError("missing value for '" + v.name + "'");
        out[v.name] = value_from_json(v.type, json.at(v.name));
    }
    if (json.size() != variables_.size()) throw ValueError("values name undeclared variables");
    return out;
}

Values WorkflowModel::partial_values_from_json(const Json& json, const std::vector<std::string>& allowed) const
{
    if (!json.is_object()) throw ValueError("values must be an object");
    Values out;
    for (const auto& [name, value] : json.items()) {
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            throw ValueError("'" + name + "' is not permitted here");
        }
        out[name] = value_from_json(*variable_type(name), value);
    }
    return out;
}

Json CaseState::to_json() const
{
    return {{"case_id", case_id}, {"model", model}, {"marking", marking_to_json(marking)},
            {"values", values_to_json(values)}};
}

} // namespace wfchain::petri
