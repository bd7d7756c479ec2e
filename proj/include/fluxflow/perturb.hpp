#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fluxflow/error.hpp"
#include "fluxflow/rng.hpp"

namespace fluxflow {

enum class Mode { Frame, Block };

// Fraction of selectable units (frames or blocks); resolves to floor(r * units).
struct Ratio {
    double value = 0.0;
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

// Exact number of selectable units, as in the "2x1" / "4x8" table configs.
struct Count {
    std::uint64_t value = 0;
    friend bool operator==(const Count&, const Count&) = default;
};

using Degree = std::variant<Ratio, Count>;

// Minimum index distance between any two selected units.
struct MinGap {
    std::uint64_t value = 0;
    friend bool operator==(const MinGap&, const MinGap&) = default;
};

// Interval as a fraction of the selectable units; resolves to floor(r * units).
struct GapRatio {
    double value = 0.0;
    friend bool operator==(const GapRatio&, const GapRatio&) = default;
};

using Interval = std::variant<MinGap, GapRatio>;

struct PerturbationSpec {
    Mode mode = Mode::Frame;
    Degree degree = Count{0};
    std::optional<std::uint64_t> block_size;  // required iff mode == Block
    Interval interval = MinGap{0};
    bool require_move = false;

    static PerturbationSpec frames(Degree degree, Interval interval = MinGap{0}, bool require_move = false);
    static PerturbationSpec blocks(std::uint64_t block_size, Degree degree, Interval interval = MinGap{0},
                                   bool require_move = false);

    // Length-independent checks. Throws Error{InvalidSpec}.
    void validate() const;

    friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

// Bijection on {0, ..., n-1}. map[i] is the output position of input frame i.
class Permutation {
public:
    Permutation() = default;

    static Permutation identity(std::size_t n);

    // Throws Error{InvalidSpec} when `map` is not a bijection.
    static Permutation from_map(std::vector<std::size_t> map);

    std::size_t size() const noexcept { return map_.size(); }
    std::span<const std::size_t> map() const noexcept { return map_; }
    std::size_t operator[](std::size_t i) const { return map_[i]; }

    Permutation inverse() const;
    bool is_identity() const noexcept;
    std::size_t moved_count() const noexcept;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    explicit Permutation(std::vector<std::size_t> map) : map_{std::move(map)} {}

    std::vector<std::size_t> map_;
};

// Sorted selected positions: frame indices in frame mode, block indices in block mode.
struct SelectionResult {
    std::vector<std::size_t> indices;
    friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

struct BlockPartition {
    std::size_t blocks = 0;      // M = floor(n / k)
    std::size_t block_size = 0;  // k
    std::size_t remainder = 0;   // trailing frames that belong to no block
    friend bool operator==(const BlockPartition&, const BlockPartition&) = default;
};

// A spec bound to a concrete sequence length.
struct ResolvedDegree {
    std::size_t units = 0;         // frames (frame mode) or blocks (block mode)
    std::size_t count = 0;         // units to select
    std::size_t min_gap = 0;       // in units
    std::size_t feasible_max = 0;  // largest count satisfying min_gap
    std::size_t frames_moved = 0;  // count, or count * k in block mode
    bool exceeds_half = false;     // frames_moved > floor(n / 2)
};

struct PerturbationResult {
    Permutation permutation;
    SelectionResult selection;
    std::vector<std::string> diagnostics;
};

// Max subset size of {0..n-1} with pairwise distance >= min_gap.
std::size_t feasible_max_count(std::size_t n, std::size_t min_gap) noexcept;

// Resolves degree and interval against length n. Does not check feasibility.
ResolvedDegree resolve_degree(std::size_t n, const PerturbationSpec& spec);

// Uniform over all `count`-subsets of {0..n-1} whose pairwise gaps are at
// least max(1, min_gap). Throws InfeasibleSelectionError.
SelectionResult select_subset(std::size_t n, std::size_t count, std::size_t min_gap, SplitMix64& rng);

// In-place Fisher-Yates.
void shuffle(std::span<std::size_t> values, SplitMix64& rng);

BlockPartition partition_blocks(std::size_t n, std::size_t block_size);

// Lifts a permutation of block slots to frames; blocks move rigidly and
// remainder frames stay fixed. Throws LengthMismatch if sizes disagree.
Permutation expand_block_permutation(std::size_t n, const BlockPartition& partition,
                                     std::span<const std::size_t> block_map);

PerturbationResult frame_perturbation(std::size_t n, const PerturbationSpec& spec, SplitMix64& rng);
PerturbationResult block_perturbation(std::size_t n, const PerturbationSpec& spec, SplitMix64& rng);

// Dispatches on spec.mode with a fresh stream seeded by clip_seed. This is
// the replay entry point: equal arguments give byte-identical results.
PerturbationResult perturb(std::size_t n, const PerturbationSpec& spec, std::uint64_t clip_seed);

// out[perm[i]] = seq[i]
template <typename T>
std::vector<T> apply_permutation(std::span<const T> seq, const Permutation& perm)
{
    if (seq.size() != perm.size())
        throw Error{ErrorCode::LengthMismatch, "sequence has " + std::to_string(seq.size()) +
                                                   " elements, permutation has " + std::to_string(perm.size())};
    std::vector<T> out(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i)
        out[perm[i]] = seq[i];
    return out;
}

template <typename T>
std::vector<T> apply_permutation(const std::vector<T>& seq, const Permutation& perm)
{
    return apply_permutation(std::span<const T>{seq}, perm);
}

// Linear ramp from `start` to `end` over total_steps, clamped to [0, 1].
double schedule_degree(std::uint64_t step, std::uint64_t total_steps, double start, double end);

std::string_view to_string(Mode mode) noexcept;

} // namespace fluxflow
