#include <wfchain/core/digest.hpp>

#include <bit>
#include <stdexcept>

#include <sodium.h>

namespace wfchain {

namespace {

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

Digest Digest::from_hex(std::string_view hex)
{
    if (hex.size() != 64) {
        throw std::invalid_argument("digest must be 64 hex characters");
    }
    Bytes bytes{};
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const int hi = hex_value(hex[2 * i]);
        const int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("digest contains a non-hex character");
        }
        bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return Digest(bytes);
}

std::string Digest::hex() const
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(64, '0');
    for (std::size_t i = 0; i < bytes_.size(); ++i) {
        out[2 * i] = kDigits[bytes_[i] >> 4];
        out[2 * i + 1] = kDigits[bytes_[i] & 0x0f];
    }
    return out;
}

bool Digest::is_zero() const
{
    for (auto b : bytes_) {
        if (b != 0) return false;
    }
    return true;
}

unsigned Digest::leading_zero_bits() const
{
    unsigned bits = 0;
    for (auto b : bytes_) {
        if (b == 0) {
            bits += 8;
            continue;
        }
        bits += static_cast<unsigned>(std::countl_zero(b));
        break;
    }
    return bits;
}

Digest digest(std::span<const std::uint8_t> bytes)
{
    Digest::Bytes out{};
    crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
    return Digest(out);
}

Digest digest(std::string_view bytes)
{
    return digest(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

} // namespace wfchain
