#include <wfchain/node/config.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include <wfchain/chain/block.hpp>

namespace wfchain::node {

namespace {

const Json& member(const Json& obj, const std::string& path, const char* key)
{
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + "." + key, "required");
    return *it;
}

std::string string_at(const Json& v, const std::string& path)
{
    if (!v.is_string()) throw ConfigError(path, "must be a string");
    auto s = v.get<std::string>();
    if (s.empty()) throw ConfigError(path, "must not be empty");
    return s;
}

std::int64_t int_at(const Json& v, const std::string& path, std::int64_t lo, std::int64_t hi)
{
    if (!v.is_number_integer()) throw ConfigError(path, "must be an integer");
    const auto n = v.get<std::int64_t>();
    if (n < lo || n > hi) {
        throw ConfigError(path, "must be between " + std::to_string(lo) + " and " + std::to_string(hi));
    }
    return n;
}

bool bool_at(const Json& v, const std::string& path)
{
    if (!v.is_boolean()) throw ConfigError(path, "must be a boolean");
    return v.get<bool>();
}

void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ConfigError(path.empty() ? "$" : path, "must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : obj.items()) {
        if (!ok.contains(k)) throw ConfigError(path + (path.empty() ? "" : ".") + k, "unknown field");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void check_address(const std::string& address, const std::string& path)
{
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
        throw ConfigError(path, "expected host:port");
    }
    try {
        std::size_t used = 0;
        const auto port = std::stoul(address.substr(colon + 1), &used);
        if (used != address.size() - colon - 1 || port > 65535) throw std::out_of_range("port");
    } catch (const std::exception&) {
        throw ConfigError(path, "bad port");
    }
}

} // namespace

HandlerSpec parse_handler(const Json& v, const std::string& path)
{
    only_keys(v, path, {"outputs", "fail", "command"});
    if (v.size() != 1) throw ConfigError(path, "exactly one of outputs, fail, command");
    HandlerSpec h;
    if (v.contains("outputs")) {
        if (!v["outputs"].is_object()) throw ConfigError(path + ".outputs", "must be an object");
        h.kind = HandlerSpec::Kind::Outputs;
        h.outputs = v["outputs"];
    } else if (v.contains("fail")) {
        h.kind = HandlerSpec::Kind::Fail;
        h.fail_reason = string_at(v["fail"], path + ".fail");
    } else {
        h.kind = HandlerSpec::Kind::Command;
        h.command = string_at(v["command"], path + ".command");
    }
    return h;
}

Json HandlerSpec::to_json() const
{
    switch (kind) {
    case Kind::Outputs: return {{"outputs", outputs}};
    case Kind::Fail: return {{"fail", fail_reason}};
    case Kind::Command: return {{"command", command}};
    }
    return nullptr;
}

NodeConfig parse_config(const Json& doc, const std::filesystem::path& base_dir)
{
    only_keys(doc, "", {"node", "network", "peers", "design", "confirmation_depth", "mining", "listen", "handlers",
                        "data_dir"});
    NodeConfig c;

    const auto& node = member(doc, "", "node");
    only_keys(node, "node", {"name", "key_file"});
    c.name = string_at(member(node, "node", "name"), "node.name");
    c.key_file = resolve(base_dir, string_at(member(node, "node", "key_file"), "node.key_file"));

    const auto& net = member(doc, "", "network");
    only_keys(net, "network", {"id", "genesis"});
    c.network_id = string_at(member(net, "network", "id"), "network.id");
    if (net.contains("genesis")) {
        try {
            c.genesis = Digest::from_hex(string_at(net["genesis"], "network.genesis"));
        } catch (const std::invalid_argument&) {
            throw ConfigError("network.genesis", "expected 64 hex characters");
        }
        if (*c.genesis != chain::Block::genesis(c.network_id).hash) {
            throw ConfigError("network.genesis", "does not match the genesis block of network '" + c.network_id + "'");
        }
    }

    if (doc.contains("peers")) {
        const auto& peers = doc["peers"];
        if (!peers.is_array()) throw ConfigError("peers", "must be an array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < peers.size(); ++i) {
            const auto path = "peers[" + std::to_string(i) + "]";
            only_keys(peers[i], path, {"name", "address", "public_key"});
            p2p::PeerInfo p;
            p.name = string_at(member(peers[i], path, "name"), path + ".name");
            p.address = string_at(member(peers[i], path, "address"), path + ".address");
            check_address(p.address, path + ".address");
            try {
                p.key = PublicKey::from_base64(string_at(member(peers[i], path, "public_key"), path + ".public_key"));
            } catch (const VerificationError& e) {
                throw ConfigError(path + ".public_key", e.what());
            }
            if (p.name == c.name) throw ConfigError(path + ".name", "a node cannot list itself as a peer");
            if (!names.insert(p.name).second) throw ConfigError(path + ".name", "duplicate peer name '" + p.name + "'");
            c.peers.push_back(std::move(p));
        }
    }

    if (doc.contains("design")) {
        try {
            c.design = engine::design_from_string(string_at(doc["design"], "design"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("design", e.what());
        }
    }
    if (doc.contains("confirmation_depth")) {
        c.confirmation_depth = static_cast<unsigned>(int_at(doc["confirmation_depth"], "confirmation_depth", 0, 1000));
    }
    if (doc.contains("mining")) {
        const auto& m = doc["mining"];
        only_keys(m, "mining", {"enabled", "difficulty", "budget"});
        if (m.contains("enabled")) c.mining.enabled = bool_at(m["enabled"], "mining.enabled");
        if (m.contains("difficulty")) c.mining.difficulty = static_cast<unsigned>(int_at(m["difficulty"], "mining.difficulty", 0, 32));
        if (m.contains("budget")) c.mining.budget = static_cast<std::uint64_t>(int_at(m["budget"], "mining.budget", 1, 1 << 30));
    }
    if (doc.contains("listen")) {
        const auto& l = doc["listen"];
        only_keys(l, "listen", {"p2p", "api"});
        if (l.contains("p2p")) {
            c.listen_p2p = string_at(l["p2p"], "listen.p2p");
            check_address(c.listen_p2p, "listen.p2p");
        }
        if (l.contains("api")) {
            c.listen_api = string_at(l["api"], "listen.api");
            check_address(c.listen_api, "listen.api");
        }
    }
    if (doc.contains("handlers")) {
        const auto& h = doc["handlers"];
        if (!h.is_object()) throw ConfigError("handlers", "must be an object");
        for (const auto& [name, spec] : h.items()) c.handlers[name] = parse_handler(spec, "handlers." + name);
    }
    c.data_dir = resolve(base_dir, doc.contains("data_dir") ? string_at(doc["data_dir"], "data_dir") : "data/" + c.name);
    return c;
}

NodeConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    Json doc;
    try {
        doc = parse_canonical(ss.str());
    } catch (const std::exception& e) {
        throw ConfigError("$", std::string("not valid JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path());
}

Json NodeConfig::to_json() const
{
    Json peers_json = Json::array();
    for (const auto& p : peers) {
        peers_json.push_back({{"name", p.name}, {"address", p.address}, {"public_key", p.key.to_base64()}});
    }
    Json handlers_json = Json::object();
    for (const auto& [name, h] : handlers) handlers_json[name] = h.to_json();
    Json network = {{"id", network_id}};
    if (genesis) network["genesis"] = genesis->hex();
    return {{"node", {{"name", name}, {"key_file", key_file.string()}}},
            {"network", std::move(network)},
            {"peers", std::move(peers_json)},
            {"design", engine::to_string(design)},
            {"confirmation_depth", confirmation_depth},
            {"mining", {{"enabled", mining.enabled}, {"difficulty", mining.difficulty}, {"budget", mining.budget}}},
            {"listen", {{"p2p", listen_p2p}, {"api", listen_api}}},
            {"handlers", std::move(handlers_json)},
            {"data_dir", data_dir.string()}};
}

Membership NodeConfig::membership(const PublicKey& own_key) const
{
    Membership m;
    m.add(name, own_key);
    for (const auto& p : peers) m.add(p.name, p.key);
    return m;
}

KeyPair load_key_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("node.key_file", "cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r' || line.back() == ' ')) line.pop_back();
    try {
        const auto seed = base64_decode(line);
        if (seed.size() != 32) throw VerificationError("seed must be 32 bytes");
        return KeyPair::from_seed(seed);
    } catch (const VerificationError& e) {
        throw ConfigError("node.key_file", path.string() + ": " + e.what());
    }
}

void write_key_file(const std::filesystem::path& path, const KeyPair& keys)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto seed = keys.seed();
    out << base64_encode(seed) << "\n";
    out.close();
    std::filesystem::permissions(path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
}

} // namespace wfchain::node
