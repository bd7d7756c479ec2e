#pragma once

// Umbrella header and the index-only entry points used by dataloader bindings.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxflow/emit.hpp"
#include "fluxflow/error.hpp"
#include "fluxflow/manifest.hpp"
#include "fluxflow/metrics.hpp"
#include "fluxflow/perturb.hpp"
#include "fluxflow/raster.hpp"
#include "fluxflow/rng.hpp"

namespace fluxflow {

inline constexpr std::string_view version = "0.1.0";

// The permutation map for one clip, identical to what `augment` logs for the
// same (clip_id, n_frames, spec, global_seed).
inline std::vector<std::size_t> permute_indices(std::string_view clip_id, std::size_t n_frames,
                                                const PerturbationSpec& spec, std::uint64_t global_seed)
{
    const auto result = perturb(n_frames, spec, derive_clip_seed(global_seed, clip_id));
    const auto map = result.permutation.map();
    return {map.begin(), map.end()};
}

// Elementwise permute_indices; the first failing clip's error propagates.
inline std::vector<std::vector<std::size_t>> batch_permute(std::span<const std::string> clip_ids,
                                                           std::span<const std::size_t> n_frames,
                                                           const PerturbationSpec& spec, std::uint64_t global_seed)
{
    if (clip_ids.size() != n_frames.size())
        throw Error{ErrorCode::LengthMismatch, "clip_ids and n_frames differ in length"};
    std::vector<std::vector<std::size_t>> out;
    out.reserve(clip_ids.size());
    for (std::size_t i = 0; i < clip_ids.size(); ++i)
        out.push_back(permute_indices(clip_ids[i], n_frames[i], spec, global_seed));
    return out;
}

} // namespace fluxflow
