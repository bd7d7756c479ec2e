#include "fluxflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "fluxflow/raster.hpp"
#include "fluxflow/tar.hpp"

namespace fluxflow {

namespace fs = std::filesystem;

namespace {

// Removes every registered file unless released.
class OutputGuard {
public:
    ~OutputGuard()
    {
        if (released_)
            return;
        std::error_code ec;
        for (const auto& p : paths_)
            fs::remove(p, ec);
    }

    void add(const fs::path& p) { paths_.push_back(p); }
    void add(const std::vector<fs::path>& ps) { paths_.insert(paths_.end(), ps.begin(), ps.end()); }
    void release() noexcept { released_ = true; }
    const std::vector<fs::path>& paths() const noexcept { return paths_; }

private:
    std::vector<fs::path> paths_;
    bool released_ = false;
};

std::ofstream open_output(const fs::path& path, OutputGuard& guard)
{
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out)
        throw Error{ErrorCode::IoError, "cannot create " + path.string()};
    guard.add(path);
    return out;
}

void close_output(std::ofstream& out, const fs::path& path)
{
    out.close();
    if (!out)
        throw Error{ErrorCode::IoError, "failed writing " + path.string()};
}

fs::path with_suffix(const fs::path& prefix, const char* suffix)
{
    return fs::path{prefix.string() + suffix};
}

std::uint64_t fnv1a64_append(std::uint64_t h, std::uint64_t v) noexcept
{
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= fnv1a64_prime;
    }
    return h;
}

ShardClip read_clip_frames(const InputClip& clip)
{
    ShardClip sc;
    sc.clip_id = clip.entry.clip_id;
    sc.frames.reserve(clip.entry.frames.size());
    for (std::size_t i = 0; i < clip.entry.frames.size(); ++i) {
        try {
            sc.frames.push_back(read_file_bytes(clip.frame_path(i)));
        } catch (const Error& ex) {
            throw Error{ex.code(), "clip \"" + sc.clip_id + "\": " + ex.what()};
        }
    }
    return sc;
}

} // namespace

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++)
                    run(i);
            });
    }

    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

fs::path InputClip::frame_path(std::size_t i) const
{
    fs::path p{entry.frames.at(i)};
    return p.is_absolute() ? p : base_dir / p;
}

std::vector<InputClip> load_inputs(const std::vector<fs::path>& inputs, const std::string& pattern)
{
    std::vector<InputClip> clips;
    std::unordered_set<std::string> seen;
    for (const auto& input : inputs) {
        std::error_code ec;
        if (fs::is_directory(input, ec)) {
            clips.push_back(InputClip{scan_frame_dir(input, pattern), input});
        } else {
            for (auto& e : load_manifest_file(input))
                clips.push_back(InputClip{std::move(e), input.parent_path()});
        }
    }
    for (const auto& c : clips)
        if (!seen.insert(c.entry.clip_id).second)
            throw Error{ErrorCode::DuplicateClip, "clip \"" + c.entry.clip_id + "\" appears in more than one input"};
    return clips;
}

fs::path manifest_output_path(const fs::path& prefix)
{
    return with_suffix(prefix, ".manifest.jsonl");
}

fs::path log_output_path(const fs::path& prefix)
{
    return with_suffix(prefix, ".log.jsonl");
}

AugmentSummary run_augment(const AugmentConfig& config)
{
    config.spec.validate();
    if (config.workers == 0)
        throw Error{ErrorCode::InvalidSpec, "workers must be at least 1"};
    if (config.shard_size == 0)
        throw Error{ErrorCode::InvalidSpec, "shard size must be at least 1"};

    const auto clips = load_inputs(config.inputs, config.frame_pattern);

    std::vector<PerturbationRecord> records(clips.size());
    std::vector<std::vector<std::string>> clip_diagnostics(clips.size());
    parallel_for(clips.size(), config.workers, [&](std::size_t i) {
        const auto& e = clips[i].entry;
        try {
            const auto seed = derive_clip_seed(config.global_seed, e.clip_id);
            auto result = perturb(e.frames.size(), config.spec, seed);
            clip_diagnostics[i] = std::move(result.diagnostics);
            records[i] = PerturbationRecord{e.clip_id, e.frames.size(), config.spec, seed,
                                            std::move(result.selection), std::move(result.permutation)};
        } catch (const Error& ex) {
            throw Error{ex.code(), "clip \"" + e.clip_id + "\": " + ex.what()};
        }
    });

    AugmentSummary summary;
    summary.clips = clips.size();
    std::unordered_set<std::string> seen_diag;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        summary.frames_moved += records[i].permutation.moved_count();
        for (auto& d : clip_diagnostics[i])
            if (seen_diag.insert(d).second)
                summary.diagnostics.push_back(d);
    }

    OutputGuard guard;
    if (config.output_mode == OutputMode::Index) {
        std::vector<ClipManifestEntry> entries;
        entries.reserve(clips.size());
        for (const auto& c : clips)
            entries.push_back(c.entry);
        const auto path = manifest_output_path(config.output_prefix);
        auto out = open_output(path, guard);
        write_augmented_manifest(out, entries, records);
        close_output(out, path);
    } else {
        ShardFileWriter writer{config.output_prefix, config.shard_size};
        try {
            for (std::size_t first = 0; first < clips.size(); first += config.shard_size) {
                const auto count = std::min(config.shard_size, clips.size() - first);
                std::vector<ShardClip> batch(count);
                parallel_for(count, config.workers,
                             [&](std::size_t j) { batch[j] = read_clip_frames(clips[first + j]); });
                for (std::size_t j = 0; j < count; ++j)
                    writer.add_clip(batch[j], records[first + j]);
            }
            writer.finish();
        } catch (...) {
            guard.add(writer.files());
            throw;
        }
        guard.add(writer.files());
    }

    const auto log_path = log_output_path(config.output_prefix);
    auto log = open_output(log_path, guard);
    write_perturbation_log(log, records);
    close_output(log, log_path);

    summary.outputs = guard.paths();
    guard.release();
    return summary;
}

MetricsSummary run_metrics(const MetricsConfig& config)
{
    if (config.workers == 0)
        throw Error{ErrorCode::InvalidSpec, "workers must be at least 1"};
    const auto clips = load_inputs(config.inputs, config.frame_pattern);

    std::vector<std::optional<TemporalReport>> reports(clips.size());
    std::vector<std::string> errors(clips.size());
    parallel_for(clips.size(), config.workers, [&](std::size_t i) {
        const auto& clip = clips[i];
        try {
            std::vector<FrameRaster> frames;
            frames.reserve(clip.entry.frames.size());
            for (std::size_t f = 0; f < clip.entry.frames.size(); ++f)
                frames.push_back(load_pnm_file(clip.frame_path(f)));
            reports[i] = analyze_clip(clip.entry.clip_id, frames, config.options);
        } catch (const std::exception& ex) {
            errors[i] = "clip \"" + clip.entry.clip_id + "\": " + ex.what();
        }
    });

    OutputGuard guard;
    auto out = open_output(config.report_path, guard);
    std::ofstream csv;
    if (config.csv_path) {
        csv = open_output(*config.csv_path, guard);
        write_angular_csv_header(csv);
    }

    MetricsSummary summary;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (!reports[i]) {
            summary.failures.push_back(errors[i]);
            continue;
        }
        out << report_to_json(*reports[i]) << '\n';
        if (config.csv_path)
            write_angular_csv_rows(csv, *reports[i]);
        ++summary.clips_ok;
    }
    close_output(out, config.report_path);
    if (config.csv_path)
        close_output(csv, *config.csv_path);
    guard.release();
    return summary;
}

InspectSummary inspect_log(std::istream& log)
{
    InspectSummary summary;
    for (const auto& r : read_perturbation_log(log)) {
        verify_record(r);
        const auto map = r.permutation.map();
        for (std::size_t i = 0; i < map.size(); ++i)
            ++summary.displacement_histogram[map[i] > i ? map[i] - i : i - map[i]];
        ++summary.records;
    }
    return summary;
}

InspectSummary inspect_log_file(const fs::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw Error{ErrorCode::IoError, "cannot open " + path.string()};
    return inspect_log(in);
}

BenchResult run_bench(const BenchConfig& config)
{
    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    BenchResult r;
    r.clips = config.clips;

    std::vector<std::string> ids(config.clips);
    for (std::size_t i = 0; i < config.clips; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "clip-%08zu", i);
        ids[i] = buf;
    }

    std::uint64_t digest = fnv1a64_offset_basis;
    const auto t0 = clock::now();
    for (const auto& id : ids) {
        const auto result = perturb(config.frames, config.spec, derive_clip_seed(config.seed, id));
        for (auto v : result.permutation.map())
            digest = fnv1a64_append(digest, v);
    }
    r.index_seconds = seconds_since(t0);
    r.permutations_per_sec = r.index_seconds > 0 ? static_cast<double>(config.clips) / r.index_seconds : 0.0;
    r.permutation_digest = digest;

    // Raster mode: synthetic PGM frames sharded in memory.
    SplitMix64 pixels{config.seed ^ 0x5eed};
    std::vector<ShardClip> clips(config.raster_clips);
    std::vector<PerturbationRecord> records;
    records.reserve(config.raster_clips);
    for (std::size_t c = 0; c < config.raster_clips; ++c) {
        clips[c].clip_id = "raster-" + std::to_string(c);
        for (std::size_t f = 0; f < config.raster_frames; ++f) {
            auto frame = FrameRaster::gray(config.width, config.height);
            for (auto& p : frame.pixels)
                p = static_cast<std::uint8_t>(pixels.next());
            clips[c].frames.push_back(encode_pnm(frame));
        }
        records.push_back(make_record(clips[c].clip_id, config.raster_frames, config.spec, config.seed));
    }

    const auto t1 = clock::now();
    auto shards = config.raster_clips ? write_tar_shards(clips, records, config.shard_size) : std::vector<Shard>{};
    r.raster_seconds = seconds_since(t1);
    r.raster_clips = config.raster_clips;
    std::uint64_t shard_digest = fnv1a64_offset_basis;
    for (const auto& s : shards) {
        r.shard_bytes += s.tar.size();
        for (auto b : s.tar) {
            shard_digest ^= b;
            shard_digest *= fnv1a64_prime;
        }
    }
    r.shard_digest = shard_digest;
    r.shard_mb_per_sec = r.raster_seconds > 0 ? static_cast<double>(r.shard_bytes) / 1e6 / r.raster_seconds : 0.0;
    return r;
}

std::string bench_to_json(const BenchResult& r)
{
    nlohmann::ordered_json j;
    j["index_mode"] = {{"clips", r.clips},
                       {"seconds", r.index_seconds},
                       {"permutations_per_sec", r.permutations_per_sec},
                       {"permutation_digest", r.permutation_digest}};
    j["raster_mode"] = {{"clips", r.raster_clips},
                        {"shard_bytes", r.shard_bytes},
                        {"seconds", r.raster_seconds},
                        {"shard_mb_per_sec", r.shard_mb_per_sec},
                        {"shard_digest", r.shard_digest}};
    return j.dump();
}

} // namespace fluxflow
