#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace wfchain {

/// Seeded generator with platform-independent derived draws. The standard
/// distributions are implementation-defined, so they are not used where
/// simulation traces must be byte-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return unit() < p; }

    /// RFC 4122 version-4 UUID text drawn from this generator.
    std::string uuid4();

private:
    std::mt19937_64 engine_;
};

} // namespace wfchain
