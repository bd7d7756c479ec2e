#include "fluxflow/rng.hpp"

#include "fluxflow/error.hpp"

namespace fluxflow {

std::uint64_t bounded_uniform(SplitMix64& rng, std::uint64_t bound)
{
    if (bound == 0)
        throw Error{ErrorCode::InvalidBound, "bound must be at least 1"};

    // (2^64 - bound) % bound == 2^64 % bound in unsigned arithmetic.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = rng.next();
        if (r >= threshold)
            return r % bound;
    }
}

} // namespace fluxflow
