#pragma once

#include <cstdint>
#include <string_view>

namespace fluxflow {

// SplitMix64 stream. The value type is the whole generator state, so copying
// it forks the stream and equal states always produce equal sequences.
class SplitMix64 {
public:
    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    constexpr explicit SplitMix64(std::uint64_t state = 0) noexcept : state_{state} {}

    // Two xor-shift-multiply rounds, without the gamma increment.
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t next() noexcept
    {
        state_ += golden_gamma;
        return mix(state_);
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

    friend constexpr bool operator==(const SplitMix64&, const SplitMix64&) = default;

private:
    std::uint64_t state_;
};

constexpr std::uint64_t fnv1a64_offset_basis = 14695981039346656037ULL;
constexpr std::uint64_t fnv1a64_prime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = fnv1a64_offset_basis;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= fnv1a64_prime;
    }
    return h;
}

// Per-clip stream seed: mix(FNV-1a-64(clip_id) ^ global_seed).
constexpr std::uint64_t derive_clip_seed(std::uint64_t global_seed, std::string_view clip_id) noexcept
{
    return SplitMix64::mix(fnv1a64(clip_id) ^ global_seed);
}

// Uniform draw in [0, bound) by threshold rejection: raw draws below
// 2^64 mod bound are discarded so every residue class is equally likely.
// Throws Error{InvalidBound} when bound == 0.
std::uint64_t bounded_uniform(SplitMix64& rng, std::uint64_t bound);

} // namespace fluxflow
