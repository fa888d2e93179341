#include <wfchain/chain/block.hpp>

#include <charconv>

#include <sodium.h>

namespace wfchain::chain {

Transaction Transaction::create(const NodeIdentity& origin, Json body)
{
    if (!body.is_object()) throw FormatError("transaction body must be an object");
    body.erase("signature");
    body["origin"] = origin.name;
    Transaction tx;
    const auto bytes = canonical_bytes(body);
    tx.signature_ = origin.keys.sign(bytes);
    tx.id_ = digest(bytes);
    tx.origin_ = origin.name;
    tx.body_ = std::move(body);
    return tx;
}

Transaction Transaction::from_json(const Json& json)
{
    if (!json.is_object()) throw FormatError("transaction must be an object");
    if (!json.contains("signature") || !json.at("signature").is_string()) {
        throw FormatError("transaction lacks a signature");
    }
    if (!json.contains("origin") || !json.at("origin").is_string()) throw FormatError("transaction lacks an origin");
    if (!json.contains("type") || !json.at("type").is_string()) throw FormatError("transaction lacks a type");
    Transaction tx;
    try {
        tx.signature_ = signature_from_base64(json.at("signature").get<std::string>());
    } catch (const VerificationError& e) {
        throw FormatError(std::string("transaction signature: ") + e.what());
    }
    tx.body_ = json;
    tx.body_.erase("signature");
    tx.origin_ = tx.body_.at("origin").get<std::string>();
    try {
        tx.id_ = digest(canonical_bytes(tx.body_));
    } catch (const CanonicalizationError& e) {
        throw FormatError(e.what());
    }
    return tx;
}

Json Transaction::to_json() const
{
    Json out = body_;
    out["signature"] = signature_to_base64(signature_);
    return out;
}

bool Transaction::verify(const Membership& members) const
{
    const auto* key = members.find(origin_);
    if (key == nullptr) return false;
    try {
        return wfchain::verify(*key, canonical_bytes(body_), signature_);
    } catch (const std::exception&) {
        return false;
    }
}

Json Block::header_json() const
{
    Json txs = Json::array();
    for (const auto& tx : transactions) txs.push_back(tx.to_json());
    return {{"prev_hash", prev_hash.hex()},
            {"height", height},
            {"nonce", nonce},
            {"miner", miner},
            {"transactions", std::move(txs)}};
}

Digest Block::compute_hash() const
{
    return digest(canonical_bytes(header_json()));
}

Json Block::to_json() const
{
    Json out = header_json();
    out["block_hash"] = hash.hex();
    return out;
}

Block Block::from_json(const Json& json)
{
    if (!json.is_object()) throw FormatError("block must be an object");
    Block b;
    try {
        b.prev_hash = Digest::from_hex(json.at("prev_hash").get<std::string>());
        b.height = json.at("height").get<std::uint64_t>();
        b.nonce = json.at("nonce").get<std::uint64_t>();
        b.miner = json.at("miner").get<std::string>();
        for (const auto& tx : json.at("transactions")) b.transactions.push_back(Transaction::from_json(tx));
        b.hash = Digest::from_hex(json.at("block_hash").get<std::string>());
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(std::string("malformed block: ") + e.what());
    }
    if (json.size() != 6) throw FormatError("block has unexpected fields");
    if (b.compute_hash() != b.hash) throw FormatError("block_hash does not match block content");
    return b;
}

Block Block::genesis(std::string_view network_id)
{
    Block b;
    b.miner = std::string(network_id);
    b.seal();
    return b;
}

bool grind(Block& candidate, std::uint64_t first_nonce, std::uint64_t budget, unsigned difficulty)
{
    // The nonce sits between the miner and prev_hash keys in canonical form,
    // so the prefix hash state can be reused for every attempt.
    candidate.nonce = 0;
    const auto bytes = canonical_bytes(candidate.header_json());
    static constexpr std::string_view kMarker = ",\"nonce\":0,\"prev_hash\":";
    const auto at = bytes.find(kMarker);
    if (at == std::string::npos) throw std::logic_error("unexpected block header layout");
    const std::string_view prefix(bytes.data(), at + 9);
    const std::string_view suffix(bytes.data() + at + 10, bytes.size() - at - 10);

    crypto_hash_sha256_state base;
    crypto_hash_sha256_init(&base);
    crypto_hash_sha256_update(&base, reinterpret_cast<const unsigned char*>(prefix.data()), prefix.size());

    char digits[24];
    for (std::uint64_t i = 0; i < budget; ++i) {
        const std::uint64_t nonce = first_nonce + i;
        const auto res = std::to_chars(digits, digits + sizeof(digits), nonce);
        crypto_hash_sha256_state st = base;
        crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(digits),
                                  static_cast<unsigned long long>(res.ptr - digits));
        crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(suffix.data()), suffix.size());
        Digest::Bytes out{};
        crypto_hash_sha256_final(&st, out.data());
        const Digest d(out);
        if (d.leading_zero_bits() >= difficulty) {
            candidate.nonce = nonce;
            candidate.hash = d;
            return true;
        }
    }
    return false;
}

} // namespace wfchain::chain
