#include <wfchain/p2p/message.hpp>

#include <set>

namespace wfchain::p2p {

namespace {

constexpr std::string_view kTypes[] = {"BlockRequest",           "BlockSend",           "PeersRequest",
                                       "PeersSend",              "TransactionSend",     "TransactionPoolRequest",
                                       "TransactionPoolSend",    "BlockchainRequest",   "BlockchainSend"};

void require_keys(const Json& json, std::initializer_list<const char*> keys, std::string_view what)
{
    if (!json.is_object()) throw ProtocolError(std::string(what) + " must be an object");
    if (json.size() != keys.size()) throw ProtocolError(std::string(what) + " has unexpected fields");
    for (const auto* k : keys) {
        if (!json.contains(k)) throw ProtocolError(std::string(what) + " lacks '" + k + "'");
    }
}

Digest hash_field(const Json& json, const char* key)
{
    const auto& v = json.at(key);
    if (!v.is_string()) throw ProtocolError(std::string(key) + " must be a hex string");
    try {
        return Digest::from_hex(v.get<std::string>());
    } catch (const std::exception& e) {
        throw ProtocolError(std::string(key) + ": " + e.what());
    }
}

const Json& array_field(const Json& json, const char* key)
{
    const auto& v = json.at(key);
    if (!v.is_array()) throw ProtocolError(std::string(key) + " must be an array");
    return v;
}

Json signed_part(std::string_view type, const std::string& sender, Json payload)
{
    return {{"payload", std::move(payload)}, {"sender", sender}, {"type", type}};
}

struct Parsed {
    std::string type;
    std::string sender;
    Json payload;
    Signature signature;
};

Parsed parse_envelope(std::string_view body, const Membership& members)
{
    Json json;
    try {
        json = parse_canonical(body);
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("body is not canonical JSON: ") + e.what());
    }
    require_keys(json, {"payload", "sender", "signature", "type"}, "message");
    if (!json["type"].is_string() || !json["sender"].is_string() || !json["signature"].is_string()) {
        throw ProtocolError("type, sender and signature must be strings");
    }
    Parsed p{json["type"].get<std::string>(), json["sender"].get<std::string>(), json["payload"], {}};
    try {
        p.signature = signature_from_base64(json["signature"].get<std::string>());
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("signature: ") + e.what());
    }
    const auto* key = members.find(p.sender);
    if (key == nullptr) throw ProtocolError("unknown sender '" + p.sender + "'");
    if (!verify(*key, canonical_bytes(signed_part(p.type, p.sender, p.payload)), p.signature)) {
        throw ProtocolError("bad signature from '" + p.sender + "'");
    }
    return p;
}

std::string_view unframe(std::string_view frame_bytes)
{
    if (frame_bytes.size() < 4) throw ProtocolError("truncated frame header");
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<std::uint8_t>(frame_bytes[i]);
    if (n > kMaxFrameBytes) throw ProtocolError("frame exceeds cap");
    if (frame_bytes.size() - 4 != n) throw ProtocolError("frame length mismatch");
    return frame_bytes.substr(4);
}

} // namespace

std::string_view type_name(const Payload& payload)
{
    return kTypes[payload.index()];
}

Json payload_to_json(const Payload& payload)
{
    return std::visit(
        [](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BlockRequest>) {
                return {{"hash", p.hash.hex()}};
            } else if constexpr (std::is_same_v<T, BlockSend>) {
                return {{"block", p.block.to_json()}};
            } else if constexpr (std::is_same_v<T, PeersSend>) {
                Json peers = Json::array();
                for (const auto& peer : p.peers) {
                    peers.push_back(
                        {{"name", peer.name}, {"address", peer.address}, {"public_key", peer.key.to_base64()}});
                }
                return {{"peers", std::move(peers)}};
            } else if constexpr (std::is_same_v<T, TransactionSend>) {
                return {{"transaction", p.tx.to_json()}};
            } else if constexpr (std::is_same_v<T, TransactionPoolSend>) {
                Json txs = Json::array();
                for (const auto& tx : p.txs) txs.push_back(tx.to_json());
                return {{"transactions", std::move(txs)}};
            } else if constexpr (std::is_same_v<T, BlockchainRequest>) {
                return {{"from_hash", p.from_hash.hex()}};
            } else if constexpr (std::is_same_v<T, BlockchainSend>) {
                Json blocks = Json::array();
                for (const auto& b : p.blocks) blocks.push_back(b.to_json());
                return {{"blocks", std::move(blocks)}};
            } else {
                return Json::object();
            }
        },
        payload);
}

Payload payload_from_json(std::string_view type, const Json& json)
{
    try {
        if (type == "BlockRequest") {
            require_keys(json, {"hash"}, "payload");
            return BlockRequest{hash_field(json, "hash")};
        }
        if (type == "BlockSend") {
            require_keys(json, {"block"}, "payload");
            return BlockSend{chain::Block::from_json(json["block"])};
        }
        if (type == "PeersRequest") {
            require_keys(json, {}, "payload");
            return PeersRequest{};
        }
        if (type == "PeersSend") {
            require_keys(json, {"peers"}, "payload");
            PeersSend out;
            for (const auto& entry : array_field(json, "peers")) {
                require_keys(entry, {"address", "name", "public_key"}, "peer");
                out.peers.push_back({entry["name"].get<std::string>(), entry["address"].get<std::string>(),
                                     PublicKey::from_base64(entry["public_key"].get<std::string>())});
            }
            return out;
        }
        if (type == "TransactionSend") {
            require_keys(json, {"transaction"}, "payload");
            return TransactionSend{chain::Transaction::from_json(json["transaction"])};
        }
        if (type == "TransactionPoolRequest") {
            require_keys(json, {}, "payload");
            return TransactionPoolRequest{};
        }
        if (type == "TransactionPoolSend") {
            require_keys(json, {"transactions"}, "payload");
            TransactionPoolSend out;
            for (const auto& tx : array_field(json, "transactions")) {
                out.txs.push_back(chain::Transaction::from_json(tx));
            }
            return out;
        }
        if (type == "BlockchainRequest") {
            require_keys(json, {"from_hash"}, "payload");
            return BlockchainRequest{hash_field(json, "from_hash")};
        }
        if (type == "BlockchainSend") {
            require_keys(json, {"blocks"}, "payload");
            BlockchainSend out;
            for (const auto& b : array_field(json, "blocks")) out.blocks.push_back(chain::Block::from_json(b));
            return out;
        }
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProtocolError(std::string(type) + " payload: " + e.what());
    }
    throw ProtocolError("unknown message type '" + std::string(type) + "'");
}

Json Message::to_json() const
{
    auto out = signed_part(type(), sender, payload_to_json(payload));
    out["signature"] = signature_to_base64(signature);
    return out;
}

Message make_message(const NodeIdentity& sender, Payload payload)
{
    Message msg{std::move(payload), sender.name, {}};
    msg.signature = sender.keys.sign(canonical_bytes(signed_part(msg.type(), msg.sender, payload_to_json(msg.payload))));
    return msg;
}

std::string frame(std::string_view body)
{
    if (body.size() > kMaxFrameBytes) {
        throw EncodeError("message of " + std::to_string(body.size()) + " bytes exceeds the frame cap");
    }
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out;
    out.reserve(body.size() + 4);
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xff));
    out.append(body);
    return out;
}

std::string encode_body(const Message& msg)
{
    return canonical_bytes(msg.to_json());
}

std::string encode_message(const Message& msg)
{
    return frame(encode_body(msg));
}

Message decode_body(std::string_view body, const Membership& members)
{
    auto p = parse_envelope(body, members);
    return Message{payload_from_json(p.type, p.payload), std::move(p.sender), p.signature};
}

Message decode_message(std::string_view frame_bytes, const Membership& members)
{
    return decode_body(unframe(frame_bytes), members);
}

std::string encode_hello(const NodeIdentity& self, const Hello& hello)
{
    const Json payload = {{"design", hello.design},
                          {"genesis", hello.genesis.hex()},
                          {"network_id", hello.network_id},
                          {"node", hello.node},
                          {"protocol_version", hello.protocol_version}};
    auto body = signed_part("Hello", self.name, payload);
    body["signature"] = signature_to_base64(self.keys.sign(canonical_bytes(signed_part("Hello", self.name, payload))));
    return frame(canonical_bytes(body));
}

Hello decode_hello(std::string_view frame_bytes, const Membership& members)
{
    const auto p = parse_envelope(unframe(frame_bytes), members);
    if (p.type != "Hello") throw ProtocolError("expected Hello, got " + p.type);
    try {
        require_keys(p.payload, {"design", "genesis", "network_id", "node", "protocol_version"}, "Hello");
        Hello h{p.payload["network_id"].get<std::string>(), hash_field(p.payload, "genesis"),
                p.payload["node"].get<std::string>(), p.payload["protocol_version"].get<int>(),
                p.payload["design"].get<std::string>()};
        if (h.node != p.sender) throw ProtocolError("Hello node does not match sender");
        return h;
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("Hello: ") + e.what());
    }
}

std::optional<std::string> hello_mismatch(const Hello& mine, const Hello& theirs)
{
    if (theirs.protocol_version != mine.protocol_version) return "protocol version";
    if (theirs.network_id != mine.network_id) return "network id";
    if (theirs.genesis != mine.genesis) return "genesis";
    if (theirs.design != mine.design) return "engine design";
    if (theirs.node == mine.node) return "connection to self";
    return std::nullopt;
}

std::optional<std::string> FrameReader::next()
{
    if (buffer_.size() < 4) return std::nullopt;
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<std::uint8_t>(buffer_[i]);
    if (n > kMaxFrameBytes) throw ProtocolError("frame exceeds cap");
    if (buffer_.size() - 4 < n) return std::nullopt;
    auto body = buffer_.substr(4, n);
    buffer_.erase(0, 4 + n);
    return body;
}

} // namespace wfchain::p2p
