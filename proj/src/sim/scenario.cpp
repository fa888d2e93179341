#include <wfchain/sim/scenario.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <wfchain/petrinet/model.hpp>

namespace wfchain::sim {

namespace {

void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ScenarioError(path, "must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : obj.items()) {
        if (!ok.contains(k)) throw ScenarioError(path + "." + k, "unknown field");
    }
}

const Json& required(const Json& obj, const std::string& path, const char* key)
{
    const auto it = obj.find(key);
    if (it == obj.end()) throw ScenarioError(path + "." + key, "required");
    return *it;
}

std::string str(const Json& v, const std::string& path)
{
    if (!v.is_string() || v.get<std::string>().empty()) throw ScenarioError(path, "must be a non-empty string");
    return v.get<std::string>();
}

std::uint64_t uint(const Json& v, const std::string& path)
{
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ScenarioError(path, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

bool boolean(const Json& v, const std::string& path)
{
    if (!v.is_boolean()) throw ScenarioError(path, "must be a boolean");
    return v.get<bool>();
}

/// Probabilities travel as decimal strings.
double probability(const Json& v, const std::string& path)
{
    if (!v.is_string()) throw ScenarioError(path, "must be a decimal string such as \"0.05\"");
    const auto s = v.get<std::string>();
    double out = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || end != s.data() + s.size() || out < 0 || out > 1) {
        throw ScenarioError(path, "must be a decimal between 0 and 1");
    }
    return out;
}

std::string decimal(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

p2p::Latency parse_latency(const Json& v, const std::string& path)
{
    only_keys(v, path, {"min", "max", "a", "b"});
    p2p::Latency l;
    l.min = uint(required(v, path, "min"), path + ".min");
    l.max = uint(required(v, path, "max"), path + ".max");
    if (l.max < l.min) throw ScenarioError(path + ".max", "must be >= min");
    return l;
}

Json load_json_file(const std::filesystem::path& path, const std::string& where)
{
    std::ifstream in(path);
    if (!in) throw ScenarioError(where, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_canonical(ss.str());
    } catch (const std::exception& e) {
        throw ScenarioError(where, path.string() + ": " + e.what());
    }
}

std::string kind_name(ActionSpec::Kind k)
{
    switch (k) {
    case ActionSpec::Kind::Launch: return "launch";
    case ActionSpec::Kind::Complete: return "complete";
    case ActionSpec::Kind::Retry: return "retry";
    }
    return "?";
}

} // namespace

Json ActionSpec::to_json() const
{
    Json body;
    if (kind == Kind::Launch) {
        body = {{"model", model}, {"case", case_id}};
    } else {
        body = {{"case", case_id}, {"transition", transition}, {"outputs", outputs}};
    }
    return {{"tick", tick}, {"node", node}, {kind_name(kind), std::move(body)}, {"wait", wait}, {"optional", optional}};
}

const NodeSpec* Scenario::find_node(const std::string& name) const
{
    for (const auto& n : nodes) {
        if (n.name == name) return &n;
    }
    return nullptr;
}

Scenario Scenario::from_json(const Json& doc, const std::filesystem::path& base_dir)
{
    only_keys(doc, "$", {"name", "seed", "design", "difficulty", "nodes", "topology", "latency", "links", "partitions",
                         "models", "installer", "actions", "stop", "assertions"});
    Scenario s;
    if (doc.contains("name")) s.name = str(doc["name"], "name");
    s.seed = uint(required(doc, "$", "seed"), "seed");
    if (doc.contains("design")) {
        try {
            s.design = engine::design_from_string(str(doc["design"], "design"));
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("design", e.what());
        }
    }
    if (doc.contains("difficulty")) {
        s.difficulty = static_cast<unsigned>(uint(doc["difficulty"], "difficulty"));
        if (s.difficulty > 32) throw ScenarioError("difficulty", "must be between 0 and 32");
    }

    const auto& nodes = required(doc, "$", "nodes");
    if (!nodes.is_array() || nodes.empty()) throw ScenarioError("nodes", "must be a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto path = "nodes[" + std::to_string(i) + "]";
        only_keys(nodes[i], path, {"name", "confirmation_depth", "mining_rate", "handlers"});
        NodeSpec n;
        n.name = str(required(nodes[i], path, "name"), path + ".name");
        if (!names.insert(n.name).second) throw ScenarioError(path + ".name", "duplicate node " + n.name);
        if (nodes[i].contains("confirmation_depth")) {
            n.confirmation_depth = static_cast<unsigned>(uint(nodes[i]["confirmation_depth"], path + ".confirmation_depth"));
        }
        if (nodes[i].contains("mining_rate")) n.mining_rate = probability(nodes[i]["mining_rate"], path + ".mining_rate");
        if (nodes[i].contains("handlers")) {
            const auto& h = nodes[i]["handlers"];
            if (!h.is_object()) throw ScenarioError(path + ".handlers", "must be an object");
            for (const auto& [hn, spec] : h.items()) {
                try {
                    n.handlers[hn] = node::parse_handler(spec, path + ".handlers." + hn);
                } catch (const node::ConfigError& e) {
                    throw ScenarioError(e.path(), e.what());
                }
            }
        }
        s.nodes.push_back(std::move(n));
    }
    const auto known = [&](const Json& v, const std::string& path) {
        auto name = str(v, path);
        if (!names.contains(name)) throw ScenarioError(path, "unknown node " + name);
        return name;
    };

    const auto topology = doc.contains("topology") ? doc["topology"] : Json("mesh");
    if (topology.is_string()) {
        const auto t = topology.get<std::string>();
        const auto n = s.nodes.size();
        if (t == "mesh") {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) s.edges.emplace_back(s.nodes[i].name, s.nodes[j].name);
            }
        } else if (t == "line" || t == "ring") {
            for (std::size_t i = 0; i + 1 < n; ++i) s.edges.emplace_back(s.nodes[i].name, s.nodes[i + 1].name);
            if (t == "ring" && n > 2) s.edges.emplace_back(s.nodes[n - 1].name, s.nodes[0].name);
        } else {
            throw ScenarioError("topology", "expected mesh, line, ring or an edge list");
        }
    } else if (topology.is_array()) {
        for (std::size_t i = 0; i < topology.size(); ++i) {
            const auto path = "topology[" + std::to_string(i) + "]";
            if (!topology[i].is_array() || topology[i].size() != 2) throw ScenarioError(path, "expected [a, b]");
            auto a = known(topology[i][0], path + "[0]");
            auto b = known(topology[i][1], path + "[1]");
            if (a == b) throw ScenarioError(path, "self loop");
            s.edges.emplace_back(std::move(a), std::move(b));
        }
    } else {
        throw ScenarioError("topology", "expected mesh, line, ring or an edge list");
    }

    if (doc.contains("latency")) s.latency = parse_latency(doc["latency"], "latency");
    if (doc.contains("links")) {
        const auto& links = doc["links"];
        if (!links.is_array()) throw ScenarioError("links", "must be an array");
        for (std::size_t i = 0; i < links.size(); ++i) {
            const auto path = "links[" + std::to_string(i) + "]";
            LinkSpec l;
            l.latency = parse_latency(links[i], path);
            l.a = known(required(links[i], path, "a"), path + ".a");
            l.b = known(required(links[i], path, "b"), path + ".b");
            s.links.push_back(std::move(l));
        }
    }
    if (doc.contains("partitions")) {
        const auto& parts = doc["partitions"];
        if (!parts.is_array()) throw ScenarioError("partitions", "must be an array");
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const auto path = "partitions[" + std::to_string(i) + "]";
            only_keys(parts[i], path, {"from", "until", "groups"});
            p2p::PartitionWindow w;
            w.from = uint(required(parts[i], path, "from"), path + ".from");
            w.until = uint(required(parts[i], path, "until"), path + ".until");
            if (w.until <= w.from) throw ScenarioError(path + ".until", "must be after from");
            const auto& groups = required(parts[i], path, "groups");
            if (!groups.is_array()) throw ScenarioError(path + ".groups", "must be an array of node lists");
            std::set<std::string> used;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const auto gp = path + ".groups[" + std::to_string(g) + "]";
                if (!groups[g].is_array()) throw ScenarioError(gp, "must be an array");
                std::set<std::string> members;
                for (std::size_t k = 0; k < groups[g].size(); ++k) {
                    auto name = known(groups[g][k], gp + "[" + std::to_string(k) + "]");
                    if (!used.insert(name).second) throw ScenarioError(gp, name + " appears in two groups");
                    members.insert(std::move(name));
                }
                w.groups.push_back(std::move(members));
            }
            s.partitions.push_back(std::move(w));
        }
    }

    std::set<std::string> model_names;
    if (doc.contains("models")) {
        const auto& models = doc["models"];
        if (!models.is_array()) throw ScenarioError("models", "must be an array");
        for (std::size_t i = 0; i < models.size(); ++i) {
            const auto path = "models[" + std::to_string(i) + "]";
            Json m = models[i];
            if (m.is_string()) {
                const std::filesystem::path file(m.get<std::string>());
                m = load_json_file(file.is_absolute() || base_dir.empty() ? file : base_dir / file, path);
            }
            try {
                model_names.insert(petri::WorkflowModel::from_json(m).name());
            } catch (const std::exception& e) {
                throw ScenarioError(path, e.what());
            }
            s.models.push_back(std::move(m));
        }
    }
    s.installer = doc.contains("installer") ? known(doc["installer"], "installer") : s.nodes.front().name;

    if (doc.contains("actions")) {
        const auto& actions = doc["actions"];
        if (!actions.is_array()) throw ScenarioError("actions", "must be an array");
        for (std::size_t i = 0; i < actions.size(); ++i) {
            const auto path = "actions[" + std::to_string(i) + "]";
            const auto& a = actions[i];
            only_keys(a, path, {"tick", "node", "launch", "complete", "retry", "wait", "optional", "repeat"});
            ActionSpec spec;
            spec.tick = uint(required(a, path, "tick"), path + ".tick");
            spec.node = known(required(a, path, "node"), path + ".node");
            if (a.contains("wait")) spec.wait = uint(a["wait"], path + ".wait");
            if (a.contains("optional")) spec.optional = boolean(a["optional"], path + ".optional");
            const int kinds = a.contains("launch") + a.contains("complete") + a.contains("retry");
            if (kinds != 1) throw ScenarioError(path, "exactly one of launch, complete, retry");
            if (a.contains("launch")) {
                const auto& l = a["launch"];
                only_keys(l, path + ".launch", {"model", "case"});
                spec.kind = ActionSpec::Kind::Launch;
                spec.model = str(required(l, path + ".launch", "model"), path + ".launch.model");
                if (!model_names.contains(spec.model)) throw ScenarioError(path + ".launch.model", "unknown model " + spec.model);
                spec.case_id = str(required(l, path + ".launch", "case"), path + ".launch.case");
            } else {
                const char* key = a.contains("complete") ? "complete" : "retry";
                const auto& c = a[key];
                const auto cp = path + "." + key;
                only_keys(c, cp, {"case", "transition", "outputs"});
                spec.kind = a.contains("complete") ? ActionSpec::Kind::Complete : ActionSpec::Kind::Retry;
                spec.case_id = str(required(c, cp, "case"), cp + ".case");
                spec.transition = str(required(c, cp, "transition"), cp + ".transition");
                if (c.contains("outputs")) {
                    if (!c["outputs"].is_object()) throw ScenarioError(cp + ".outputs", "must be an object");
                    spec.outputs = c["outputs"];
                }
                if (spec.kind == ActionSpec::Kind::Retry && !a.contains("optional")) spec.optional = true;
            }
            if (a.contains("repeat")) {
                const auto& r = a["repeat"];
                only_keys(r, path + ".repeat", {"every", "count"});
                const auto every = uint(required(r, path + ".repeat", "every"), path + ".repeat.every");
                const auto count = uint(required(r, path + ".repeat", "count"), path + ".repeat.count");
                if (count == 0) throw ScenarioError(path + ".repeat.count", "must be positive");
                for (std::uint64_t k = 0; k < count; ++k) {
                    auto copy = spec;
                    copy.tick = spec.tick + k * every;
                    copy.case_id = spec.case_id + "-" + std::to_string(k + 1);
                    s.actions.push_back(std::move(copy));
                }
            } else {
                s.actions.push_back(std::move(spec));
            }
        }
    }

    if (doc.contains("stop")) {
        const auto& st = doc["stop"];
        only_keys(st, "stop", {"max_ticks", "quiescence"});
        if (st.contains("max_ticks")) s.max_ticks = uint(st["max_ticks"], "stop.max_ticks");
        if (st.contains("quiescence")) s.quiescence = boolean(st["quiescence"], "stop.quiescence");
    }

    static const std::set<std::string> kAssertions = {"converged_heads", "no_invalid_confirmed",
                                                      "deferred_choice_exclusive", "designs_equivalent",
                                                      "latency_bound"};
    if (doc.contains("assertions")) {
        const auto& as = doc["assertions"];
        if (!as.is_array()) throw ScenarioError("assertions", "must be an array");
        for (std::size_t i = 0; i < as.size(); ++i) {
            const auto path = "assertions[" + std::to_string(i) + "]";
            AssertionSpec spec;
            if (as[i].is_string()) {
                spec.name = as[i].get<std::string>();
            } else if (as[i].is_object() && as[i].size() == 1) {
                spec.name = as[i].begin().key();
                spec.params = as[i].begin().value();
                if (!spec.params.is_object()) throw ScenarioError(path + "." + spec.name, "parameters must be an object");
            } else {
                throw ScenarioError(path, "expected a name or {name: {parameters}}");
            }
            if (!kAssertions.contains(spec.name)) throw ScenarioError(path, "unknown assertion " + spec.name);
            if (spec.name == "deferred_choice_exclusive") {
                const auto pp = path + ".deferred_choice_exclusive";
                str(required(spec.params, pp, "case"), pp + ".case");
                const auto& ts = required(spec.params, pp, "transitions");
                if (!ts.is_array() || ts.size() < 2) throw ScenarioError(pp + ".transitions", "needs two or more transitions");
            }
            if (spec.name == "latency_bound" && spec.params.contains("tolerance")) {
                probability(spec.params["tolerance"], path + ".latency_bound.tolerance");
            }
            s.assertions.push_back(std::move(spec));
        }
    }
    return s;
}

Scenario Scenario::load(const std::filesystem::path& path)
{
    return from_json(load_json_file(path, "$"), path.parent_path());
}

Json Scenario::to_json() const
{
    Json nodes_json = Json::array();
    for (const auto& n : nodes) {
        Json h = Json::object();
        for (const auto& [name, spec] : n.handlers) h[name] = spec.to_json();
        Json entry = {{"name", n.name}, {"confirmation_depth", n.confirmation_depth}, {"mining_rate", decimal(n.mining_rate)}};
        if (!h.empty()) entry["handlers"] = std::move(h);
        nodes_json.push_back(std::move(entry));
    }
    Json edges_json = Json::array();
    for (const auto& [a, b] : edges) edges_json.push_back({a, b});
    Json links_json = Json::array();
    for (const auto& l : links) links_json.push_back({{"a", l.a}, {"b", l.b}, {"min", l.latency.min}, {"max", l.latency.max}});
    Json parts = Json::array();
    for (const auto& w : partitions) {
        Json groups = Json::array();
        for (const auto& g : w.groups) groups.push_back(Json(std::vector<std::string>(g.begin(), g.end())));
        parts.push_back({{"from", w.from}, {"until", w.until}, {"groups", std::move(groups)}});
    }
    Json actions_json = Json::array();
    for (const auto& a : actions) actions_json.push_back(a.to_json());
    Json asserts = Json::array();
    for (const auto& a : assertions) {
        if (a.params.empty()) {
            asserts.push_back(a.name);
        } else {
            asserts.push_back({{a.name, a.params}});
        }
    }
    return {{"name", name},
            {"seed", seed},
            {"design", engine::to_string(design)},
            {"difficulty", difficulty},
            {"nodes", std::move(nodes_json)},
            {"topology", std::move(edges_json)},
            {"latency", {{"min", latency.min}, {"max", latency.max}}},
            {"links", std::move(links_json)},
            {"partitions", std::move(parts)},
            {"models", models},
            {"installer", installer},
            {"actions", std::move(actions_json)},
            {"stop", {{"max_ticks", max_ticks}, {"quiescence", quiescence}}},
            {"assertions", std::move(asserts)}};
}

} // namespace wfchain::sim
