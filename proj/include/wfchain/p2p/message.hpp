#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <wfchain/chain/block.hpp>

namespace wfchain::p2p {

class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxFrameBytes = 16u * 1024u * 1024u;
inline constexpr int kProtocolVersion = 1;

struct PeerInfo {
    std::string name;
    std::string address;
    PublicKey key;

    bool operator==(const PeerInfo&) const = default;
};

struct BlockRequest {
    Digest hash;
};
struct BlockSend {
    chain::Block block;
};
struct PeersRequest {};
struct PeersSend {
    std::vector<PeerInfo> peers;
};
struct TransactionSend {
    chain::Transaction tx;
};
struct TransactionPoolRequest {};
struct TransactionPoolSend {
    std::vector<chain::Transaction> txs;
};
struct BlockchainRequest {
    Digest from_hash;
};
struct BlockchainSend {
    std::vector<chain::Block> blocks;
};

using Payload = std::variant<BlockRequest, BlockSend, PeersRequest, PeersSend, TransactionSend,
                             TransactionPoolRequest, TransactionPoolSend, BlockchainRequest, BlockchainSend>;

std::string_view type_name(const Payload& payload);
Json payload_to_json(const Payload& payload);
/// Throws ProtocolError on unknown types and malformed payloads.
Payload payload_from_json(std::string_view type, const Json& json);

struct Message {
    Payload payload;
    std::string sender;
    Signature signature{};

    std::string_view type() const { return type_name(payload); }
    Json to_json() const;
};

/// Signs the canonical bytes of {payload, sender, type}.
Message make_message(const NodeIdentity& sender, Payload payload);

/// Canonical JSON body {payload, sender, signature, type}.
std::string encode_body(const Message& msg);
/// Body behind a 4-byte big-endian length; EncodeError above the frame cap.
std::string encode_message(const Message& msg);

/// Strict parse of a body: the sender must be a member and the signature
/// must verify. Throws ProtocolError otherwise.
Message decode_body(std::string_view body, const Membership& members);
/// Exactly one complete frame.
Message decode_message(std::string_view frame, const Membership& members);

/// Connection-opening exchange; not one of the gossip messages.
struct Hello {
    std::string network_id;
    Digest genesis;
    std::string node;
    int protocol_version = kProtocolVersion;
    std::string design;

    bool operator==(const Hello&) const = default;
};

std::string encode_hello(const NodeIdentity& self, const Hello& hello);
/// Verifies the signature and that the sender matches the node field.
Hello decode_hello(std::string_view frame, const Membership& members);
/// Empty when compatible, otherwise the mismatch.
std::optional<std::string> hello_mismatch(const Hello& mine, const Hello& theirs);

/// Splits a byte stream into frames.
class FrameReader {
public:
    void feed(std::string_view bytes) { buffer_.append(bytes); }
    /// Next complete frame body; ProtocolError on an oversize length.
    std::optional<std::string> next();
    std::size_t buffered() const { return buffer_.size(); }

private:
    std::string buffer_;
};

std::string frame(std::string_view body);

} // namespace wfchain::p2p
