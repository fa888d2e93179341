#include <wfchain/core/crypto.hpp>

#include <cstring>

#include <sodium.h>

namespace wfchain {

namespace {

struct SodiumInit {
    SodiumInit()
    {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialisation failed");
        }
    }
};

void ensure_sodium()
{
    static const SodiumInit init;
}

} // namespace

std::string PublicKey::to_base64() const
{
    return base64_encode(bytes);
}

PublicKey PublicKey::from_base64(std::string_view text)
{
    const auto raw = base64_decode(text);
    if (raw.size() != 32) {
        throw VerificationError("public key must be 32 bytes");
    }
    PublicKey key;
    std::memcpy(key.bytes.data(), raw.data(), raw.size());
    return key;
}

KeyPair KeyPair::generate()
{
    ensure_sodium();
    std::array<std::uint8_t, 32> seed{};
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
}

KeyPair KeyPair::from_seed(std::span<const std::uint8_t> seed)
{
    ensure_sodium();
    if (seed.size() != crypto_sign_SEEDBYTES) {
        throw VerificationError("Ed25519 seed must be 32 bytes");
    }
    KeyPair keys;
    crypto_sign_seed_keypair(keys.public_.bytes.data(), keys.secret_.data(), seed.data());
    return keys;
}

std::array<std::uint8_t, 32> KeyPair::seed() const
{
    std::array<std::uint8_t, 32> out{};
    crypto_sign_ed25519_sk_to_seed(out.data(), secret_.data());
    return out;
}

Signature KeyPair::sign(std::string_view message) const
{
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, reinterpret_cast<const unsigned char*>(message.data()), message.size(),
                         secret_.data());
    return sig;
}

bool verify(const PublicKey& key, std::string_view message, std::span<const std::uint8_t> signature)
{
    ensure_sodium();
    if (signature.size() != crypto_sign_BYTES) {
        throw VerificationError("signature must be 64 bytes");
    }
    return crypto_sign_verify_detached(signature.data(), reinterpret_cast<const unsigned char*>(message.data()),
                                       message.size(), key.bytes.data()) == 0;
}

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    const auto variant = sodium_base64_VARIANT_ORIGINAL;
    std::string out(sodium_base64_ENCODED_LEN(bytes.size(), variant), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
    out.resize(std::strlen(out.c_str()));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                          sodium_base64_VARIANT_ORIGINAL) != 0
        || end != text.data() + text.size()) {
        throw VerificationError("malformed base64");
    }
    out.resize(len);
    return out;
}

std::string signature_to_base64(const Signature& sig)
{
    return base64_encode(sig);
}

Signature signature_from_base64(std::string_view text)
{
    const auto raw = base64_decode(text);
    if (raw.size() != 64) {
        throw VerificationError("signature must be 64 bytes");
    }
    Signature sig{};
    std::memcpy(sig.data(), raw.data(), raw.size());
    return sig;
}

const PublicKey* Membership::find(std::string_view name) const
{
    const auto it = keys_.find(name);
    return it == keys_.end() ? nullptr : &it->second;
}

SignedEnvelope SignedEnvelope::seal(const NodeIdentity& signer, Json payload)
{
    SignedEnvelope env;
    env.signature = signer.keys.sign(canonical_bytes(payload));
    env.payload = std::move(payload);
    env.signer = signer.name;
    return env;
}

bool SignedEnvelope::verify(const Membership& members) const
{
    const auto* key = members.find(signer);
    if (key == nullptr) {
        return false;
    }
    try {
        return wfchain::verify(*key, canonical_bytes(payload), signature);
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace wfchain
