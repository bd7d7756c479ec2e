#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fluxflow/emit.hpp"
#include "fluxflow/manifest.hpp"
#include "fluxflow/metrics.hpp"
#include "fluxflow/perturb.hpp"

namespace fluxflow {

// Runs fn(0) .. fn(count - 1) on up to `workers` threads. Every index runs;
// afterwards the exception of the lowest failing index is rethrown, so the
// reported error does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct InputClip {
    ClipManifestEntry entry;
    std::filesystem::path base_dir;  // relative frame paths resolve against this

    std::filesystem::path frame_path(std::size_t i) const;
};

// Each input is a JSONL manifest or a directory of frames (scanned with
// `pattern`). clip_id must be unique across all inputs.
std::vector<InputClip> load_inputs(const std::vector<std::filesystem::path>& inputs, const std::string& pattern);

enum class OutputMode { Index, Materialize };

struct AugmentConfig {
    std::vector<std::filesystem::path> inputs;
    std::string frame_pattern = "*.p[gp]m";
    std::filesystem::path output_prefix;
    PerturbationSpec spec;
    std::uint64_t global_seed = 0;
    OutputMode output_mode = OutputMode::Index;
    std::size_t shard_size = 1000;
    std::size_t workers = 1;
};

struct AugmentSummary {
    std::size_t clips = 0;
    std::size_t frames_moved = 0;
    std::vector<std::filesystem::path> outputs;
    std::vector<std::string> diagnostics;  // distinct, in first-seen clip order
};

std::filesystem::path manifest_output_path(const std::filesystem::path& prefix);
std::filesystem::path log_output_path(const std::filesystem::path& prefix);

// Index mode writes "{prefix}.manifest.jsonl"; materialize mode writes
// "{prefix}-NNNNN.tar" shards with ".crc.jsonl" sidecars. Both always write
// "{prefix}.log.jsonl". On any error every file created so far is removed
// and the error is rethrown.
AugmentSummary run_augment(const AugmentConfig& config);

struct MetricsConfig {
    std::vector<std::filesystem::path> inputs;
    std::string frame_pattern = "*.p[gp]m";
    MetricsOptions options;
    std::filesystem::path report_path;
    std::optional<std::filesystem::path> csv_path;
    std::size_t workers = 1;
};

struct MetricsSummary {
    std::size_t clips_ok = 0;
    std::vector<std::string> failures;  // one message per failed clip
};

// Writes one TemporalReport line per successful clip, in input order.
MetricsSummary run_metrics(const MetricsConfig& config);

struct InspectSummary {
    std::size_t records = 0;
    std::map<std::size_t, std::size_t> displacement_histogram;  // |map[i] - i| -> frame count
};

// Replays every record; throws Error{ReplayMismatch} naming the first bad clip.
InspectSummary inspect_log(std::istream& log);
InspectSummary inspect_log_file(const std::filesystem::path& path);

struct BenchConfig {
    std::size_t clips = 10000;
    std::size_t frames = 16;
    PerturbationSpec spec = PerturbationSpec::frames(Ratio{0.25});
    std::uint64_t seed = 0;
    std::size_t raster_clips = 64;
    std::size_t raster_frames = 16;
    std::size_t width = 64;
    std::size_t height = 64;
    std::size_t shard_size = 16;
};

struct BenchResult {
    std::size_t clips = 0;
    double index_seconds = 0;
    double permutations_per_sec = 0;
    std::uint64_t permutation_digest = 0;  // FNV-1a over every map; timing-free
    std::size_t raster_clips = 0;
    std::uint64_t shard_bytes = 0;
    double raster_seconds = 0;
    double shard_mb_per_sec = 0;
    std::uint64_t shard_digest = 0;
};

BenchResult run_bench(const BenchConfig& config);
std::string bench_to_json(const BenchResult& result);

} // namespace fluxflow
