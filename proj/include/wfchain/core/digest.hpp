#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace wfchain {

/// SHA-256 value, rendered as 64 lowercase hex characters.
class Digest {
public:
    using Bytes = std::array<std::uint8_t, 32>;

    Digest() = default;
    explicit Digest(const Bytes& bytes) : bytes_(bytes) {}

    static Digest zero() { return Digest{}; }
    /// Throws std::invalid_argument unless given exactly 64 hex characters.
    static Digest from_hex(std::string_view hex);

    const Bytes& bytes() const { return bytes_; }
    std::string hex() const;
    std::string short_hex() const { return hex().substr(0, 12); }
    bool is_zero() const;
    unsigned leading_zero_bits() const;

    auto operator<=>(const Digest&) const = default;

private:
    Bytes bytes_{};
};

Digest digest(std::span<const std::uint8_t> bytes);
Digest digest(std::string_view bytes);

struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept
    {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i) {
            h = (h << 8) | d.bytes()[i];
        }
        return h;
    }
};

} // namespace wfchain
