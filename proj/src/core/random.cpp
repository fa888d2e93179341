#include <wfchain/core/random.hpp>

#include <array>

namespace wfchain {

std::uint64_t Rng::below(std::uint64_t bound)
{
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next();
    while (x >= limit) {
        x = next();
    }
    return x % bound;
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi)
{
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(below(span));
}

std::string Rng::uuid4()
{
    std::array<std::uint8_t, 16> b{};
    for (std::size_t i = 0; i < b.size(); i += 8) {
        const auto x = next();
        for (std::size_t j = 0; j < 8; ++j) {
            b[i + j] = static_cast<std::uint8_t>(x >> (8 * j));
        }
    }
    b[6] = static_cast<std::uint8_t>((b[6] & 0x0f) | 0x40);
    b[8] = static_cast<std::uint8_t>((b[8] & 0x3f) | 0x80);
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) out += '-';
        out += kDigits[b[i] >> 4];
        out += kDigits[b[i] & 0x0f];
    }
    return out;
}

} // namespace wfchain
