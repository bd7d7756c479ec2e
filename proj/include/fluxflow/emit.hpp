#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fluxflow/manifest.hpp"
#include "fluxflow/perturb.hpp"

namespace fluxflow {

// Replayable audit entry: perturb(n_frames, spec, clip_seed) must reproduce
// `selection` and `permutation` exactly.
struct PerturbationRecord {
    std::string clip_id;
    std::size_t n_frames = 0;
    PerturbationSpec spec;
    std::uint64_t clip_seed = 0;
    SelectionResult selection;
    Permutation permutation;

    friend bool operator==(const PerturbationRecord&, const PerturbationRecord&) = default;
};

// Derives the clip seed and runs the perturbation for one clip.
PerturbationRecord make_record(std::string clip_id, std::size_t n_frames, const PerturbationSpec& spec,
                               std::uint64_t global_seed);

// Throws Error{ReplayMismatch} naming the clip if the stored outcome differs.
void verify_record(const PerturbationRecord& record);

// Plain manifest writer; parse_manifest(write_manifest(x)) == x.
void write_manifest(std::ostream& out, std::span<const ClipManifestEntry> entries);
std::string write_manifest(std::span<const ClipManifestEntry> entries);

// Writes each entry with its frames permuted by the record of the same
// clip_id. Throws Error{MissingRecord} or Error{LengthMismatch}.
void write_augmented_manifest(std::ostream& out, std::span<const ClipManifestEntry> entries,
                              std::span<const PerturbationRecord> records);
std::string write_augmented_manifest(std::span<const ClipManifestEntry> entries,
                                     std::span<const PerturbationRecord> records);

// One JSON object per line, keys in the fixed order
// clip_id, n_frames, spec, clip_seed, selection, permutation.
void write_perturbation_log(std::ostream& out, std::span<const PerturbationRecord> records);
std::string write_perturbation_log(std::span<const PerturbationRecord> records);

// Inverse of write_perturbation_log. Structural errors throw ParseError; a
// permutation that is not a bijection is rejected as well.
std::vector<PerturbationRecord> read_perturbation_log(std::istream& in);
std::vector<PerturbationRecord> read_perturbation_log(std::string_view text);

// Single-line JSON echo of a spec, as embedded in log lines:
// {"mode":"frame","degree":{"count":2},"block_size":null,"min_gap":0,"require_move":false}
// with "gap_ratio" in place of "min_gap" when the interval is a ratio.
std::string spec_to_json(const PerturbationSpec& spec);
PerturbationSpec spec_from_json(std::string_view text);

} // namespace fluxflow
