#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <wfchain/core/canonical.hpp>

namespace wfchain {

class VerificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PublicKey {
    std::array<std::uint8_t, 32> bytes{};

    std::string to_base64() const;
    /// Throws VerificationError on malformed input.
    static PublicKey from_base64(std::string_view text);

    auto operator<=>(const PublicKey&) const = default;
};

using Signature = std::array<std::uint8_t, 64>;

/// Ed25519 key pair. The secret half never leaves the owning node.
class KeyPair {
public:
    static KeyPair generate();
    static KeyPair from_seed(std::span<const std::uint8_t> seed);

    const PublicKey& public_key() const { return public_; }
    std::array<std::uint8_t, 32> seed() const;

    Signature sign(std::string_view message) const;

private:
    PublicKey public_;
    std::array<std::uint8_t, 64> secret_{};
};

/// Throws VerificationError when the signature is not 64 bytes long.
bool verify(const PublicKey& key, std::string_view message, std::span<const std::uint8_t> signature);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws VerificationError on malformed base64.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string signature_to_base64(const Signature& sig);
/// Throws VerificationError on malformed input or wrong length.
Signature signature_from_base64(std::string_view text);

struct NodeIdentity {
    std::string name;
    KeyPair keys;
    std::string address;
};

/// Public keys of the configured network members.
class Membership {
public:
    void add(std::string name, PublicKey key) { keys_[std::move(name)] = key; }
    const PublicKey* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    const std::map<std::string, PublicKey, std::less<>>& all() const { return keys_; }

private:
    std::map<std::string, PublicKey, std::less<>> keys_;
};

/// Payload plus the signer's signature over its canonical bytes.
struct SignedEnvelope {
    Json payload;
    std::string signer;
    Signature signature{};

    static SignedEnvelope seal(const NodeIdentity& signer, Json payload);
    /// False for unknown signers and for bad signatures.
    bool verify(const Membership& members) const;
};

} // namespace wfchain
