#include "fluxflow/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fluxflow {

namespace {

// Resamples allowed before falling back to a rotation when require_move is set.
constexpr int max_move_resamples = 16;

bool is_unit_interval(double v) noexcept
{
    return v >= 0.0 && v <= 1.0;  // false for NaN
}

std::size_t floor_fraction(double ratio, std::size_t units) noexcept
{
    auto v = std::floor(ratio * static_cast<double>(units));
    return std::min(units, static_cast<std::size_t>(v));
}

// Arranges `targets` (a copy of the sorted selection) into a Fisher-Yates
// permutation of itself, honoring require_move.
void shuffle_selection(std::vector<std::size_t>& targets, bool require_move, SplitMix64& rng)
{
    shuffle(targets, rng);
    if (!require_move || targets.size() < 2)
        return;

    auto identity = [&] { return std::is_sorted(targets.begin(), targets.end()); };
    for (int attempt = 0; attempt < max_move_resamples && identity(); ++attempt)
        shuffle(targets, rng);
    if (identity())
        std::rotate(targets.begin(), targets.begin() + 1, targets.end());
}

void add_degree_diagnostic(std::size_t n, const ResolvedDegree& resolved, std::vector<std::string>& out)
{
    if (resolved.exceeds_half)
        out.push_back("perturbation degree moves " + std::to_string(resolved.frames_moved) +
                      " frames, more than half of " + std::to_string(n));
}

} // namespace

std::string_view to_string(Mode mode) noexcept
{
    return mode == Mode::Frame ? "frame" : "block";
}

PerturbationSpec PerturbationSpec::frames(Degree degree, Interval interval, bool require_move)
{
    return PerturbationSpec{Mode::Frame, degree, std::nullopt, interval, require_move};
}

PerturbationSpec PerturbationSpec::blocks(std::uint64_t block_size, Degree degree, Interval interval,
                                          bool require_move)
{
    return PerturbationSpec{Mode::Block, degree, block_size, interval, require_move};
}

void PerturbationSpec::validate() const
{
    if (const auto* r = std::get_if<Ratio>(&degree); r && !is_unit_interval(r->value))
        throw Error{ErrorCode::InvalidSpec, "ratio must lie in [0, 1], got " + std::to_string(r->value)};
    if (const auto* g = std::get_if<GapRatio>(&interval); g && !(g->value >= 0.0 && g->value < 1.0))
        throw Error{ErrorCode::InvalidSpec, "gap ratio must lie in [0, 1), got " + std::to_string(g->value)};
    if (mode == Mode::Block) {
        if (!block_size)
            throw Error{ErrorCode::InvalidSpec, "block mode requires a block size"};
        if (*block_size == 0)
            throw Error{ErrorCode::InvalidSpec, "block size must be at least 1"};
    } else if (block_size) {
        throw Error{ErrorCode::InvalidSpec, "block size is only valid in block mode"};
    }
}

Permutation Permutation::identity(std::size_t n)
{
    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    return Permutation{std::move(map)};
}

Permutation Permutation::from_map(std::vector<std::size_t> map)
{
    std::vector<bool> seen(map.size(), false);
    for (std::size_t i = 0; i < map.size(); ++i) {
        auto v = map[i];
        if (v >= map.size() || seen[v])
            throw Error{ErrorCode::InvalidSpec, "map is not a bijection at index " + std::to_string(i)};
        seen[v] = true;
    }
    return Permutation{std::move(map)};
}

Permutation Permutation::inverse() const
{
    std::vector<std::size_t> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i)
        inv[map_[i]] = i;
    return Permutation{std::move(inv)};
}

bool Permutation::is_identity() const noexcept
{
    return moved_count() == 0;
}

std::size_t Permutation::moved_count() const noexcept
{
    std::size_t moved = 0;
    for (std::size_t i = 0; i < map_.size(); ++i)
        moved += map_[i] != i;
    return moved;
}

std::size_t feasible_max_count(std::size_t n, std::size_t min_gap) noexcept
{
    if (n == 0)
        return 0;
    if (min_gap <= 1)
        return n;
    return (n - 1) / min_gap + 1;
}

ResolvedDegree resolve_degree(std::size_t n, const PerturbationSpec& spec)
{
    spec.validate();
    if (n == 0)
        throw Error{ErrorCode::InvalidSpec, "sequence length must be at least 1"};

    ResolvedDegree r;
    std::size_t k = 1;
    if (spec.mode == Mode::Block) {
        k = static_cast<std::size_t>(*spec.block_size);
        r.units = n / k;
    } else {
        r.units = n;
    }

    if (const auto* c = std::get_if<Count>(&spec.degree))
        r.count = static_cast<std::size_t>(c->value);
    else
        r.count = floor_fraction(std::get<Ratio>(spec.degree).value, r.units);

    if (const auto* g = std::get_if<MinGap>(&spec.interval))
        r.min_gap = static_cast<std::size_t>(g->value);
    else
        r.min_gap = floor_fraction(std::get<GapRatio>(spec.interval).value, r.units);

    r.feasible_max = feasible_max_count(r.units, r.min_gap);
    r.frames_moved = r.count * k;
    r.exceeds_half = r.frames_moved > n / 2;
    return r;
}

SelectionResult select_subset(std::size_t n, std::size_t count, std::size_t min_gap, SplitMix64& rng)
{
    const std::size_t feasible = feasible_max_count(n, min_gap);
    if (count > feasible)
        throw InfeasibleSelectionError{count, feasible};
    if (count == 0)
        return {};

    // Gap bijection: a feasible subset x_0 < ... < x_{c-1} of [0, n) maps to
    // an unconstrained subset y_i = x_i - i * (gap - 1) of [0, slots).
    const std::size_t stretch = std::max<std::size_t>(1, min_gap) - 1;
    const std::size_t slots = n - (count - 1) * stretch;

    // Floyd's sampling; `chosen` is kept sorted.
    std::vector<std::size_t> chosen;
    chosen.reserve(count);
    for (std::size_t j = slots - count; j < slots; ++j) {
        std::size_t t = static_cast<std::size_t>(bounded_uniform(rng, j + 1));
        auto it = std::lower_bound(chosen.begin(), chosen.end(), t);
        if (it != chosen.end() && *it == t)
            chosen.insert(std::lower_bound(chosen.begin(), chosen.end(), j), j);
        else
            chosen.insert(it, t);
    }

    for (std::size_t i = 0; i < count; ++i)
        chosen[i] += i * stretch;
    return SelectionResult{std::move(chosen)};
}

void shuffle(std::span<std::size_t> values, SplitMix64& rng)
{
    for (std::size_t i = values.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(bounded_uniform(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

BlockPartition partition_blocks(std::size_t n, std::size_t block_size)
{
    if (block_size == 0)
        throw Error{ErrorCode::InvalidSpec, "block size must be at least 1"};
    const std::size_t blocks = n / block_size;
    return BlockPartition{blocks, block_size, n - blocks * block_size};
}

Permutation expand_block_permutation(std::size_t n, const BlockPartition& partition,
                                     std::span<const std::size_t> block_map)
{
    if (block_map.size() != partition.blocks ||
        partition.blocks * partition.block_size + partition.remainder != n)
        throw Error{ErrorCode::LengthMismatch, "block map does not match the partition"};

    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    const std::size_t k = partition.block_size;
    for (std::size_t b = 0; b < block_map.size(); ++b)
        for (std::size_t off = 0; off < k; ++off)
            map[b * k + off] = block_map[b] * k + off;
    return Permutation::from_map(std::move(map));
}

PerturbationResult frame_perturbation(std::size_t n, const PerturbationSpec& spec, SplitMix64& rng)
{
    if (spec.mode != Mode::Frame)
        throw Error{ErrorCode::InvalidSpec, "frame_perturbation requires a frame-mode spec"};
    const auto resolved = resolve_degree(n, spec);

    PerturbationResult result;
    add_degree_diagnostic(n, resolved, result.diagnostics);
    result.selection = select_subset(n, resolved.count, resolved.min_gap, rng);

    const auto& sel = result.selection.indices;
    std::vector<std::size_t> targets = sel;
    shuffle_selection(targets, spec.require_move, rng);

    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    for (std::size_t i = 0; i < sel.size(); ++i)
        map[sel[i]] = targets[i];
    result.permutation = Permutation::from_map(std::move(map));
    return result;
}

PerturbationResult block_perturbation(std::size_t n, const PerturbationSpec& spec, SplitMix64& rng)
{
    if (spec.mode != Mode::Block)
        throw Error{ErrorCode::InvalidSpec, "block_perturbation requires a block-mode spec"};
    const auto resolved = resolve_degree(n, spec);
    const auto partition = partition_blocks(n, static_cast<std::size_t>(*spec.block_size));

    PerturbationResult result;
    add_degree_diagnostic(n, resolved, result.diagnostics);
    result.selection = select_subset(partition.blocks, resolved.count, resolved.min_gap, rng);

    const auto& sel = result.selection.indices;
    std::vector<std::size_t> targets = sel;
    shuffle_selection(targets, spec.require_move, rng);

    std::vector<std::size_t> block_map(partition.blocks);
    std::iota(block_map.begin(), block_map.end(), std::size_t{0});
    for (std::size_t i = 0; i < sel.size(); ++i)
        block_map[sel[i]] = targets[i];
    result.permutation = expand_block_permutation(n, partition, block_map);
    return result;
}

PerturbationResult perturb(std::size_t n, const PerturbationSpec& spec, std::uint64_t clip_seed)
{
    SplitMix64 rng{clip_seed};
    return spec.mode == Mode::Frame ? frame_perturbation(n, spec, rng) : block_perturbation(n, spec, rng);
}

double schedule_degree(std::uint64_t step, std::uint64_t total_steps, double start, double end)
{
    if (total_steps == 0)
        throw Error{ErrorCode::InvalidSpec, "total_steps must be at least 1"};
    if (step > total_steps)
        throw Error{ErrorCode::InvalidSpec, "step exceeds total_steps"};
    if (!is_unit_interval(start) || !is_unit_interval(end))
        throw Error{ErrorCode::InvalidSpec, "schedule endpoints must lie in [0, 1]"};
    double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return std::clamp(start + (end - start) * t, 0.0, 1.0);
}

} // namespace fluxflow
