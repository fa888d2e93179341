#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <wfchain/core/canonical.hpp>
#include <wfchain/core/crypto.hpp>
#include <wfchain/core/digest.hpp>

namespace wfchain::chain {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A signed workflow transaction. The body carries the transaction type,
/// its workflow fields and the `origin` node; the signature covers the
/// canonical bytes of the body, and the id is their digest.
class Transaction {
public:
    static Transaction create(const NodeIdentity& origin, Json body);
    /// Parses the wire form (body fields plus base64 `signature`).
    static Transaction from_json(const Json& json);

    Json to_json() const;

    const Json& body() const { return body_; }
    const std::string& origin() const { return origin_; }
    std::string type() const { return body_.value("type", std::string{}); }
    const Digest& id() const { return id_; }
    const Signature& signature() const { return signature_; }

    /// False for unknown origins and bad signatures.
    bool verify(const Membership& members) const;

    bool operator==(const Transaction& other) const { return id_ == other.id_ && signature_ == other.signature_; }

private:
    Json body_;
    std::string origin_;
    Signature signature_{};
    Digest id_;
};

struct Block {
    Digest prev_hash;
    std::uint64_t height = 0;
    std::uint64_t nonce = 0;
    std::string miner;
    std::vector<Transaction> transactions;
    Digest hash;

    /// Every field except block_hash; the hash is taken over its canonical bytes.
    Json header_json() const;
    Digest compute_hash() const;
    void seal() { hash = compute_hash(); }

    Json to_json() const;
    /// Throws FormatError on malformed input or a block_hash that does not
    /// match the content.
    static Block from_json(const Json& json);

    /// The network's fixed first block: zero predecessor, height 0, and the
    /// network id in the miner field.
    static Block genesis(std::string_view network_id);

    bool is_genesis() const { return height == 0 && prev_hash.is_zero(); }
};

using BlockPtr = std::shared_ptr<const Block>;

/// Tries nonces [first_nonce, first_nonce + budget) on the candidate. On
/// success the candidate's nonce and hash are set and true is returned.
bool grind(Block& candidate, std::uint64_t first_nonce, std::uint64_t budget, unsigned difficulty);

} // namespace wfchain::chain
