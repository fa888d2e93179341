#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <wfchain/engine/engine.hpp>
#include <wfchain/p2p/message.hpp>

namespace wfchain::node {

/// Schema violation; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& problem)
        : std::runtime_error(path + ": " + problem), path_(path)
    {
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// What happens when an automated activity becomes enabled.
struct HandlerSpec {
    enum class Kind { Outputs, Fail, Command };
    Kind kind = Kind::Outputs;
    Json outputs = Json::object();
    std::string fail_reason;
    std::string command;

    Json to_json() const;
};

/// One entry of a handler map; throws ConfigError naming `path`.
HandlerSpec parse_handler(const Json& value, const std::string& path);

struct MiningConfig {
    bool enabled = false;
    unsigned difficulty = 16;
    std::uint64_t budget = 50000; // nonces per mining step
};

struct NodeConfig {
    std::string name;
    std::filesystem::path key_file;
    std::string network_id;
    std::optional<Digest> genesis; // pinned hash, checked against the network id
    std::vector<p2p::PeerInfo> peers;
    engine::Design design = engine::Design::Actions;
    unsigned confirmation_depth = 2;
    MiningConfig mining;
    std::string listen_p2p = "127.0.0.1:0";
    std::string listen_api = "127.0.0.1:0";
    std::map<std::string, HandlerSpec> handlers;
    std::filesystem::path data_dir;

    Json to_json() const;
    Membership membership(const PublicKey& own_key) const;
};

/// Parses and validates; relative paths resolve against `base_dir`.
NodeConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {});
NodeConfig load_config(const std::filesystem::path& path);

/// Key files hold the base64 Ed25519 seed on one line.
KeyPair load_key_file(const std::filesystem::path& path);
void write_key_file(const std::filesystem::path& path, const KeyPair& keys);

} // namespace wfchain::node
